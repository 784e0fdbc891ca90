"""
Nystrom discretization of alpha * pi (V2 + K2) pi on L2(mu), its spectrum and
the regularized determinant det2 = prod (1 + kappa) exp(-kappa).
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy import linalg
from tqdm import tqdm

from config import Config
from services.gibbs import pi_project
from services.selfconsistency import fixed_point_solver
from utils.errors import ArgumentError, NumericError, PhaseLensError
from utils.validators import Validators

logger = logging.getLogger(__name__)

PART_FULL = 'full'  # V2 + K2
PART_V = 'v'        # V2 only
PART_K = 'k'        # K2 only

PAIRING_TOL = 1e-10


@dataclass(eq=False)
class NystromOperator:
    """
    `matrix` is the sqrt(w rho)-conjugated form, symmetric for symmetric
    kernels; `collocation` is the raw form alpha K~(x_i, x_j) w_j rho_j.
    """
    matrix: np.ndarray
    collocation: np.ndarray
    grid: object
    alpha: float
    symmetric: bool
    small: Optional[np.ndarray] = None  # alpha C Cov(b, a) for finite-rank kernels

    def eigenvalues(self):
        return _eigenvalues(self.matrix, self.symmetric)

    def collocation_eigenvalues(self):
        return _eigenvalues(self.collocation, False)

    def moment_eigenvalues(self):
        if self.small is None:
            raise ArgumentError('moment-matrix spectrum needs a finite-rank kernel')
        return _eigenvalues(self.small, False)


@dataclass
class SpectralReport:
    alpha: float
    eigenvalues: np.ndarray
    det2: float
    sign: int
    min_abs_one_plus_kappa: float

    def significant_eigenvalues(self, tol=1e-10):
        kappa = self.eigenvalues
        return kappa[np.abs(kappa) > tol]

    def to_dict(self):
        kappa = self.significant_eigenvalues()
        return {
            'alpha': self.alpha,
            'det2': self.det2,
            'sign': self.sign,
            'min_abs_one_plus_kappa': self.min_abs_one_plus_kappa,
            'eigenvalues': [[float(k.real), float(k.imag)] for k in kappa],
        }


@dataclass
class ScanSample:
    alpha: float
    valid: bool
    report: Optional[SpectralReport] = None
    reason: str = ''


@dataclass
class CrossingScan:
    samples: List[ScanSample]
    brackets: List[tuple] = field(default_factory=list)

    @property
    def reports(self):
        return [s.report for s in self.samples if s.valid]

    def csv_rows(self):
        for s in self.samples:
            if s.valid:
                r = s.report
                yield [s.alpha, r.det2, r.sign, r.min_abs_one_plus_kappa]
            else:
                yield [s.alpha, float('nan'), '', float('nan')]


def _eigenvalues(matrix, symmetric):
    try:
        if symmetric:
            return linalg.eigvalsh(matrix).astype(complex)
        return linalg.eigvals(matrix)
    except (linalg.LinAlgError, ValueError) as e:
        raise NumericError(f"eigensolver failed: {e}", 'det2')


# ---------------------------------------------
# Operator assembly
# ---------------------------------------------
def _finite_rank_factors(model, mu, part):
    """Centered factor rows (a, b) and coupling C with K~(x, y) = a(x)^T C b(y)."""
    kernel = model.kernel
    x = mu.nodes
    a_rows, b_rows, blocks = [], [], []
    if part in (PART_FULL, PART_V) and model.l:
        v = kernel.v_values(x)
        a_rows.append(v)
        b_rows.append(v)
        blocks.append(kernel.J)
    if part in (PART_FULL, PART_K) and model.m:
        a_rows.append(kernel.k_values(x))
        b_rows.append(kernel.k_moment_values(x))
        blocks.append(kernel.G)
    if not blocks:
        return np.zeros((0, x.size)), np.zeros((0, x.size)), np.zeros((0, 0))
    a = np.array([pi_project(mu, row) for row in np.vstack(a_rows)])
    b = np.array([pi_project(mu, row) for row in np.vstack(b_rows)])
    return a, b, linalg.block_diag(*blocks)


def _centered_convolution(model, mu):
    """Doubly centered -H(x - y) under mu."""
    K = -model.kernel.matrix(mu.nodes)
    wr = mu.weights * mu.density
    row = K @ wr
    col = wr @ K
    return K - row[:, None] - col[None, :] + wr @ row


def nystrom_build(model, mu, alpha=None, part=PART_FULL):
    alpha = mu.alpha if alpha is None else alpha
    wr = mu.weights * mu.density
    s = np.sqrt(wr)
    if model.is_finite_rank:
        a, b, C = _finite_rank_factors(model, mu, part)
        kernel_matrix = a.T @ C @ b
        small = alpha * C @ ((b * wr) @ a.T)
        symmetric = model.kernel.is_symmetric_form
    else:
        if part != PART_FULL:
            raise ArgumentError('convolution kernels have no V2/K2 split')
        kernel_matrix = _centered_convolution(model, mu)
        small = None
        symmetric = bool(np.allclose(kernel_matrix, kernel_matrix.T, rtol=0,
                                     atol=1e-14 * max(1.0, np.max(np.abs(kernel_matrix)))))
    matrix = alpha * s[:, None] * kernel_matrix * s[None, :]
    if symmetric:
        matrix = 0.5 * (matrix + matrix.T)
    collocation = alpha * kernel_matrix * wr[None, :]
    return NystromOperator(matrix=matrix, collocation=collocation, grid=mu.quadrature,
                           alpha=float(alpha), symmetric=symmetric, small=small)


def moment_matrix(model, mu, alpha=None, part=PART_FULL):
    """alpha C Cov_mu(b, a): its spectrum is the nonzero Nystrom spectrum."""
    model.require_finite_rank('spectral')
    alpha = mu.alpha if alpha is None else alpha
    a, b, C = _finite_rank_factors(model, mu, part)
    wr = mu.weights * mu.density
    return alpha * C @ ((b * wr) @ a.T)


# ---------------------------------------------
# det2
# ---------------------------------------------
def _check_conjugate_pairs(kappa):
    scale = max(1.0, float(np.max(np.abs(kappa)))) if kappa.size else 1.0
    if not np.allclose(np.sort_complex(kappa), np.sort_complex(kappa.conj()),
                       rtol=0, atol=PAIRING_TOL * scale):
        raise NumericError('eigenvalues of a real operator are not closed under conjugation', 'det2')


def det2_from_eigenvalues(kappa, alpha=float('nan'), deadband=None):
    deadband = Config.SIGN_DEADBAND if deadband is None else deadband
    kappa = np.asarray(kappa, dtype=complex)
    _check_conjugate_pairs(kappa)
    value = complex(np.prod((1 + kappa) * np.exp(-kappa))) if kappa.size else 1 + 0j
    if abs(value.imag) > PAIRING_TOL * max(1.0, abs(value)):
        raise NumericError(f"det2 has imaginary residue {value.imag:.3e}", 'det2')
    det = float(value.real)
    sign = 0 if abs(det) < deadband else int(np.sign(det))
    margin = float(np.min(np.abs(1 + kappa))) if kappa.size else 1.0
    return SpectralReport(alpha=float(alpha), eigenvalues=kappa, det2=det, sign=sign,
                          min_abs_one_plus_kappa=margin)


def det2(op, deadband=None):
    return det2_from_eigenvalues(op.eigenvalues(), op.alpha, deadband)


# ---------------------------------------------
# Scans and checks along the trivial branch
# ---------------------------------------------
def trivial_branch_measure(model, alpha, start=None, q=None):
    """Base measure rho_alpha: the K2-free branch, or the symmetric density fixed point."""
    if model.is_finite_rank:
        result = fixed_point_solver.solve_trivial_branch(model, alpha, start, q=q)
    else:
        result = fixed_point_solver.solve_density_fixed_point(model, alpha, q=q)
    return result


def spectral_report(model, alpha, q=None, start=None):
    result = trivial_branch_measure(model, alpha, start, q)
    if not result.converged:
        raise NumericError(f"trivial branch did not converge at alpha={alpha:.6g} "
                           f"(residual {result.residual_inf:.2e})", 'det2')
    return det2(nystrom_build(model, result.measure, alpha)), result


def crossing_scan(model, alpha_lo, alpha_hi, steps, q=None, progress=False):
    """det2 along the trivial branch; brackets where its sign changes."""
    Validators.validate_count('steps', steps, minimum=2)
    if not alpha_lo < alpha_hi:
        raise ArgumentError(f"scan needs alpha_lo < alpha_hi, got {alpha_lo}:{alpha_hi}", 'scan')
    model.temperature.check_alpha(alpha_lo)
    model.temperature.check_alpha(alpha_hi)
    q = q or model.grid()

    samples = []
    start = None
    for alpha in tqdm(np.linspace(alpha_lo, alpha_hi, steps), desc='det2 scan', disable=not progress):
        alpha = float(alpha)
        try:
            report, branch = spectral_report(model, alpha, q, start)
            start = branch.meanfield
            samples.append(ScanSample(alpha=alpha, valid=True, report=report))
            logger.debug(f"alpha={alpha:.6g}: det2={report.det2:.6e}")
        except PhaseLensError as e:
            logger.warning(f"scan sample alpha={alpha:.6g} invalid: {e}")
            samples.append(ScanSample(alpha=alpha, valid=False, reason=str(e)))

    valid = [s for s in samples if s.valid]
    brackets = []
    for s in valid:
        if s.report.sign == 0:
            brackets.append((s.alpha, s.alpha))
    for prev, cur in zip(valid, valid[1:]):
        if prev.report.sign * cur.report.sign < 0:
            brackets.append((prev.alpha, cur.alpha))
    brackets.sort()
    logger.info(f"{model.name}: det2 scan on [{alpha_lo}, {alpha_hi}] found {len(brackets)} "
                f"sign change(s), {len(samples) - len(valid)} invalid sample(s)")
    return CrossingScan(samples=samples, brackets=brackets)


@dataclass
class InvertibilityReport:
    alpha: float
    margin: float
    invertible: bool

    def to_dict(self):
        return {'alpha': self.alpha, 'margin': self.margin, 'invertible': self.invertible}


def invertibility_check(model, alpha, mu=None, q=None, threshold=None):
    """min |1 + kappa| over the V2-only operator."""
    threshold = Config.INVERTIBLE_MARGIN if threshold is None else threshold
    model.require_finite_rank('invertibility')
    if model.l == 0:
        return InvertibilityReport(alpha=float(alpha), margin=1.0, invertible=True)
    if mu is None:
        branch = fixed_point_solver.solve_trivial_branch(model, alpha, q=q)
        mu = branch.measure
    op = nystrom_build(model, mu, alpha, part=PART_V)
    kappa = op.eigenvalues()
    margin = float(np.min(np.abs(1 + kappa)))
    return InvertibilityReport(alpha=float(alpha), margin=margin, invertible=margin > threshold)
