"""
Finite-rank bifurcation pipeline along the trivial branch rho_alpha:

    locate      root alpha0 of det(I + alpha G G(alpha))
    gram        G(alpha0) = mu(k_i k_j)
    multiplicity  near-zero eigenvalues of I + alpha0 G G(alpha0)
    dlog        d/dalpha log rho at alpha0
    mk          M_K = mu(dlog k_i k_j)
    rank        rank of [[0, core], [core, -(I + alpha0 G(alpha0)^-1 M_K)]]

plus the closed-form audit of the Dawson model.
"""
import logging
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg
from scipy.optimize import brentq

from config import Config
from models.catalog import dawson
from services.gibbs import MeanField, build_gibbs, moment, pi_project
from services.selfconsistency import fixed_point_solver
from services.spectral import invertibility_check, spectral_report
from utils.errors import (
    BracketError, LinearAlgebraError, ModelValidationError, NumericError, PhaseLensError, StageError,
)

logger = logging.getLogger(__name__)

DAWSON_SEARCH = (0.5, 3.5)
DAWSON_INTERVAL = (1.0, 3.0)
HANKEL_TOL = 1e-10
DET2_OFFSET = 0.1


# ---------------------------------------------
# Reports
# ---------------------------------------------
def matrix_dict(matrix):
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float)) if np.size(matrix) else np.zeros((0, 0))
    return {'rows': int(matrix.shape[0]), 'cols': int(matrix.shape[1]), 'data': matrix.tolist()}


@dataclass
class MultiplicityResult:
    count: int
    odd: bool
    eigenvalues: np.ndarray


@dataclass
class RankConditionResult:
    holds: bool
    rank_block: int
    rank_core: int
    block: np.ndarray
    core: np.ndarray
    condition_G: float


@dataclass
class BifurcationReport:
    model: str
    alpha0: float
    sigma0: float
    G: np.ndarray
    G_alpha0: np.ndarray
    J_alpha0: np.ndarray
    M_K: np.ndarray
    block: np.ndarray
    rank_block: int
    rank_core: int
    multiplicity: int
    multiplicity_odd: bool
    rank_condition_holds: bool
    verdict: bool
    condition_G: float
    core_eigenvalues: np.ndarray
    one_plus_M0: Optional[float] = None
    invertibility: Optional[dict] = None
    det2_below: Optional[float] = None
    det2_above: Optional[float] = None
    det2_sign_change: Optional[bool] = None

    def to_dict(self):
        return {
            'model': self.model,
            'alpha0': self.alpha0,
            'sigma0': self.sigma0,
            'G': matrix_dict(self.G),
            'G_alpha0': matrix_dict(self.G_alpha0),
            'J_alpha0': matrix_dict(self.J_alpha0),
            'M_K': matrix_dict(self.M_K),
            'block': matrix_dict(self.block),
            'rank_block': self.rank_block,
            'rank_core': self.rank_core,
            'multiplicity': self.multiplicity,
            'multiplicity_odd': self.multiplicity_odd,
            'rank_condition_holds': self.rank_condition_holds,
            'verdict': self.verdict,
            'condition_G': self.condition_G,
            'core_eigenvalues': [[float(z.real), float(z.imag)] for z in self.core_eigenvalues],
            'one_plus_M0': self.one_plus_M0,
            'invertibility': self.invertibility,
            'det2_below': self.det2_below,
            'det2_above': self.det2_above,
            'det2_sign_change': self.det2_sign_change,
        }

    def summary(self):
        lines = [
            f"model            {self.model}",
            f"alpha0           {self.alpha0:.10g}  (sigma0 {self.sigma0:.10g})",
            f"multiplicity     {self.multiplicity} ({'odd' if self.multiplicity_odd else 'even'})",
            f"rank             block {self.rank_block}, core {self.rank_core}, "
            f"m + core = {self.G.shape[0] + self.rank_core}",
        ]
        if self.one_plus_M0 is not None:
            lines.append(f"1 + M0           {self.one_plus_M0:.10g}")
        if self.det2_sign_change is not None:
            lines.append(f"det2 at -/+{DET2_OFFSET}   {self.det2_below:.6g} / {self.det2_above:.6g}")
        lines.append(f"verdict          {'bifurcation' if self.verdict else 'not certified'}")
        return '\n'.join(lines) + '\n'


@dataclass
class DawsonAudit:
    beta: float
    found: bool
    alpha0: Optional[float] = None
    sigma0: Optional[float] = None
    alpha0_in_interval: Optional[bool] = None
    moments: dict = field(default_factory=dict)
    ito_residual_2: Optional[float] = None
    ito_residual_4: Optional[float] = None
    hankel: Optional[float] = None
    hankel_nonnegative: Optional[bool] = None
    one_plus_M0_integral: Optional[float] = None
    one_plus_M0_closed_form: Optional[float] = None
    one_plus_M0_pipeline: Optional[float] = None
    m2_times_alpha0: Optional[float] = None
    m4_minus_m2: Optional[float] = None

    def to_dict(self):
        out = dict(self.__dict__)
        out['moments'] = {str(k): v for k, v in self.moments.items()}
        return out


# ---------------------------------------------
# Pipeline stages
# ---------------------------------------------
def _symmetric_kernel(model, stage):
    kernel = model.require_finite_rank(stage)
    if not kernel.is_symmetric_form:
        raise ModelValidationError(f"model '{model.name}' has distinct moment functions; "
                                   "the bifurcation pipeline needs k~ = k", stage)
    return kernel


def _branch(model, alpha, start=None, q=None, stage=None):
    result = fixed_point_solver.solve_trivial_branch(model, alpha, start, q=q)
    if not result.converged:
        raise NumericError(f"trivial branch did not converge at alpha={alpha:.10g} "
                           f"(residual {result.residual_inf:.2e})", stage)
    return result


def _gram(values, mu, weight=None):
    wr = mu.weights * mu.density
    if weight is not None:
        wr = wr * weight
    return (values * wr) @ values.T


def gram_G(model, alpha, mu=None, q=None):
    """G(alpha)_ij = mu_alpha(k_i k_j) on the trivial branch."""
    kernel = _symmetric_kernel(model, 'gram')
    if mu is None:
        mu = _branch(model, alpha, q=q, stage='gram').measure
    G = _gram(kernel.k_values(mu.nodes), mu)
    return 0.5 * (G + G.T)


def core_matrix(model, alpha, G_alpha):
    return np.eye(model.m) + alpha * model.kernel.G @ G_alpha


def locate_candidate(model, bracket, tol=None, q=None):
    """Brent root of alpha -> det(I + alpha G G(alpha)), warm-starting the branch."""
    _symmetric_kernel(model, 'locate')
    tol = Config.ROOT_TOL if tol is None else tol
    lo, hi = bracket
    model.temperature.check_alpha(lo)
    model.temperature.check_alpha(hi)
    q = q or model.grid()
    state = {'start': None}

    def f(alpha):
        branch = _branch(model, alpha, state['start'], q, 'locate')
        state['start'] = branch.meanfield
        return float(np.linalg.det(core_matrix(model, alpha, gram_G(model, alpha, branch.measure))))

    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0:
        return float(lo)
    if f_hi == 0:
        return float(hi)
    if np.sign(f_lo) == np.sign(f_hi):
        raise BracketError(f"det(I + alpha G G(alpha)) does not change sign on [{lo}, {hi}] "
                           f"({f_lo:.6g}, {f_hi:.6g})", (lo, hi))
    alpha0 = brentq(f, lo, hi, xtol=tol)
    logger.info(f"{model.name}: candidate alpha0={alpha0:.12g} on [{lo}, {hi}]")
    return float(alpha0)


def multiplicity(core, rel_tol=None):
    rel_tol = Config.MULTIPLICITY_TOL if rel_tol is None else rel_tol
    core = np.atleast_2d(np.asarray(core, dtype=float))
    eigenvalues = linalg.eigvals(core) if core.size else np.zeros(0, dtype=complex)
    radius = float(np.max(np.abs(eigenvalues))) if eigenvalues.size else 0.0
    count = int(np.sum(np.abs(eigenvalues) < rel_tol * max(1.0, radius)))
    return MultiplicityResult(count=count, odd=count % 2 == 1, eigenvalues=eigenvalues)


def covariance_J(model, mu):
    """J(alpha)_ij = mu(v_i v_j) - mu(v_i) mu(v_j)."""
    if model.l == 0:
        return np.zeros((0, 0))
    v = np.array([pi_project(mu, row) for row in model.kernel.v_values(mu.nodes)])
    return _gram(v, mu)


def dlog_rho(model, alpha0, mu=None, q=None):
    """
    d/dalpha log rho_alpha at alpha0 on the trivial branch, as a node vector.
    With u = -theta' pi V0 - pi V1 - pi v.(J r_v) and C = Cov(v, v):
        (I + alpha0 C J) r' = Cov(v, u),   result = u - alpha0 pi v.(J r').
    """
    kernel = model.require_finite_rank('dlog')
    if mu is None:
        mu = _branch(model, alpha0, q=q, stage='dlog').measure
    x = mu.nodes
    theta_prime = model.temperature.theta_prime(alpha0)
    u = -theta_prime * pi_project(mu, model.V0(x)) - pi_project(mu, kernel.V1(x))
    if model.l == 0:
        return u

    v = np.array([pi_project(mu, row) for row in kernel.v_values(x)])
    r_v = np.array([moment(mu, row) for row in kernel.v_values(x)])
    u = u - (kernel.J @ r_v) @ v
    C = _gram(v, mu)
    system = np.eye(model.l) + alpha0 * C @ kernel.J
    condition = float(np.linalg.cond(system))
    if not np.isfinite(condition) or condition > Config.MAX_CONDITION:
        raise LinearAlgebraError(f"I + alpha0 J(alpha0) J is singular (condition {condition:.3e})",
                                 'dlog', condition=condition)
    r_prime = np.linalg.solve(system, (v * (mu.weights * mu.density)) @ u)
    return u - alpha0 * (kernel.J @ r_prime) @ v


def m_k_matrix(model, alpha0, dlog, mu=None, q=None):
    kernel = model.require_finite_rank('mk')
    if mu is None:
        mu = _branch(model, alpha0, q=q, stage='mk').measure
    M = _gram(kernel.k_values(mu.nodes), mu, weight=np.asarray(dlog, dtype=float))
    return 0.5 * (M + M.T)


def matrix_rank(matrix, svd_tol):
    singular = linalg.svdvals(matrix) if matrix.size else np.zeros(0)
    if not singular.size or singular[0] == 0:
        return 0
    return int(np.sum(singular > svd_tol * singular[0]))


def rank_condition(G, G_alpha0, M_K, alpha0, svd_tol=None):
    svd_tol = Config.RANK_TOL if svd_tol is None else svd_tol
    G = np.atleast_2d(np.asarray(G, dtype=float))
    G_alpha0 = np.atleast_2d(np.asarray(G_alpha0, dtype=float))
    M_K = np.atleast_2d(np.asarray(M_K, dtype=float))
    m = G.shape[0]
    if G_alpha0.shape != (m, m) or M_K.shape != (m, m):
        raise NumericError(f"rank condition needs {m}x{m} inputs", 'rank')

    condition = float(np.linalg.cond(G_alpha0))
    if not np.isfinite(condition) or condition > Config.MAX_CONDITION:
        raise LinearAlgebraError(f"G(alpha0) is singular (condition {condition:.3e})",
                                 'rank', condition=condition)
    identity = np.eye(m)
    core = identity + alpha0 * G @ G_alpha0
    lower = -(identity + alpha0 * np.linalg.solve(G_alpha0, M_K))
    block = np.block([[np.zeros((m, m)), core], [core, lower]])
    rank_block = matrix_rank(block, svd_tol)
    rank_core = matrix_rank(core, svd_tol)
    return RankConditionResult(holds=rank_block == m + rank_core, rank_block=rank_block,
                               rank_core=rank_core, block=block, core=core, condition_G=condition)


# ---------------------------------------------
# Dawson closed forms
# ---------------------------------------------
def dawson_audit(beta=1.0, q=None):
    model = dawson(beta)
    q = q or model.grid()
    x = q.nodes

    def m2_residual(alpha):
        mu = build_gibbs(model, alpha, MeanField.zeros(model), q)
        return 1.0 - alpha * moment(mu, x ** 2)

    lo, hi = DAWSON_SEARCH
    r_lo, r_hi = m2_residual(lo), m2_residual(hi)
    if np.sign(r_lo) == np.sign(r_hi):
        logger.info(f"dawson beta={beta}: no root of 1 - alpha m2(alpha) in [{lo}, {hi}]")
        return DawsonAudit(beta=model.beta, found=False)
    alpha0 = float(brentq(m2_residual, lo, hi, xtol=Config.ROOT_TOL))

    mu = build_gibbs(model, alpha0, MeanField.zeros(model), q)
    m2, m4, m6 = (moment(mu, x ** k) for k in (2, 4, 6))
    sigma0_sq = 2 * beta / alpha0
    one_plus_integral = alpha0 ** 2 * (
        -m6 / (4 * beta) + (1 - beta) / (2 * beta) * m4
        + m4 * m2 / (4 * beta) - (1 - beta) / (2 * beta) * m2 ** 2
    ) + 1
    closed_form = ((3 - alpha0) * beta + (alpha0 - 1)) / (4 * beta)
    # (m4 - m2^2)(m2 m6 - m4^2), nonnegative for any positive measure
    hankel = (m4 - m2 ** 2) * (m2 * m6 - m4 ** 2)

    dlog = dlog_rho(model, alpha0, mu)
    M_K = m_k_matrix(model, alpha0, dlog, mu)
    pipeline = 1 + alpha0 * M_K[0, 0] / m2

    audit = DawsonAudit(
        beta=model.beta,
        found=True,
        alpha0=alpha0,
        sigma0=float(np.sqrt(sigma0_sq)),
        alpha0_in_interval=DAWSON_INTERVAL[0] <= alpha0 <= DAWSON_INTERVAL[1],
        moments={2: m2, 4: m4, 6: m6},
        ito_residual_2=-2 * m4 + 2 * (1 - beta) * m2 + sigma0_sq,
        ito_residual_4=-4 * m6 + 4 * (1 - beta) * m4 + 6 * sigma0_sq * m2,
        hankel=hankel,
        hankel_nonnegative=bool(hankel >= -HANKEL_TOL),
        one_plus_M0_integral=one_plus_integral,
        one_plus_M0_closed_form=closed_form,
        one_plus_M0_pipeline=float(pipeline),
        m2_times_alpha0=m2 * alpha0,
        m4_minus_m2=m4 - m2,
    )
    logger.info(f"dawson beta={beta}: alpha0={alpha0:.12g}, 1+M0={one_plus_integral:.10g}")
    return audit


# ---------------------------------------------
# Full report
# ---------------------------------------------
@contextmanager
def _stage(name):
    try:
        yield
    except PhaseLensError as e:
        e.stage = e.stage or name
        logger.error(f"bifurcation stage '{name}' failed: {e.message}")
        raise
    except (np.linalg.LinAlgError, ValueError, ArithmeticError) as e:
        logger.error(f"bifurcation stage '{name}' failed: {e}")
        raise StageError(name, e) from e


def full_report(model, bracket, tol=None, q=None):
    q = q or model.grid()
    with _stage('locate'):
        alpha0 = locate_candidate(model, bracket, tol, q)
        branch = _branch(model, alpha0, q=q, stage='locate')
        mu = branch.measure
    with _stage('gram'):
        G_alpha0 = gram_G(model, alpha0, mu)
        J_alpha0 = covariance_J(model, mu)
    with _stage('multiplicity'):
        core = core_matrix(model, alpha0, G_alpha0)
        mult = multiplicity(core)
    with _stage('dlog'):
        dlog = dlog_rho(model, alpha0, mu)
    with _stage('mk'):
        M_K = m_k_matrix(model, alpha0, dlog, mu)
    with _stage('rank'):
        rank = rank_condition(model.kernel.G, G_alpha0, M_K, alpha0)
    one_plus_M0 = None
    holds = rank.holds
    if model.m == 1:
        # block condition reduces to invertibility of 1 + M0
        one_plus_M0 = float(1 + alpha0 * M_K[0, 0] / G_alpha0[0, 0])
        holds = abs(one_plus_M0) > Config.RANK_TOL
    with _stage('invertibility'):
        inv = invertibility_check(model, alpha0, mu)
    with _stage('det2'):
        below, _ = spectral_report(model, alpha0 - DET2_OFFSET, q)
        above, _ = spectral_report(model, alpha0 + DET2_OFFSET, q)

    report = BifurcationReport(
        model=model.name,
        alpha0=alpha0,
        sigma0=model.temperature.sigma_for_alpha(alpha0),
        G=model.kernel.G,
        G_alpha0=G_alpha0,
        J_alpha0=J_alpha0,
        M_K=M_K,
        block=rank.block,
        rank_block=rank.rank_block,
        rank_core=rank.rank_core,
        multiplicity=mult.count,
        multiplicity_odd=mult.odd,
        rank_condition_holds=holds,
        verdict=mult.odd and holds,
        condition_G=rank.condition_G,
        core_eigenvalues=mult.eigenvalues,
        one_plus_M0=one_plus_M0,
        invertibility=inv.to_dict(),
        det2_below=below.det2,
        det2_above=above.det2,
        det2_sign_change=below.det2 * above.det2 < 0,
    )
    logger.info(f"{model.name}: alpha0={alpha0:.10g}, multiplicity {mult.count}, "
                f"rank {rank.rank_block}, verdict {report.verdict}")
    return report
