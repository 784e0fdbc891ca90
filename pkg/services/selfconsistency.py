"""
Fixed points of the self-consistency map.

Finite-rank kernels reduce the measure-valued equation to r = F(r) on
R^(l+m); convolution kernels are iterated on node densities directly.
"""
import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np
from tqdm import tqdm

from config import Config
from services.gibbs import (
    MeanField, build_convolution_gibbs, build_gibbs, meanfield_of,
)
from utils.errors import ArgumentError, BracketError
from utils.validators import Validators

logger = logging.getLogger(__name__)


def _inf_norm(v):
    v = np.asarray(v, dtype=float)
    return float(np.max(np.abs(v))) if v.size else 0.0


def selfconsistency_map(model, alpha, mf, q=None):
    """mf -> the moments (mu(v_i), mu(k~_j)) of build_gibbs(model, alpha, mf)."""
    mu = build_gibbs(model, alpha, mf, q)
    return meanfield_of(model, mu)


@dataclass
class FixedPointResult:
    alpha: float
    meanfield: MeanField
    measure: object
    residual_inf: float
    iterations: int
    converged: bool
    trace: List[float] = field(default_factory=list)

    def to_dict(self):
        return {
            'alpha': self.alpha,
            'meanfield': self.meanfield.to_dict(),
            'residual': self.residual_inf,
            'iterations': self.iterations,
            'converged': self.converged,
        }


@dataclass
class MultiStartResult:
    alpha: float
    solutions: List[FixedPointResult]
    attempted: int
    dropped: int

    def __len__(self):
        return len(self.solutions)

    def __iter__(self):
        return iter(self.solutions)


@dataclass
class CriticalSigmaResult:
    sigma_bracket: tuple
    alpha_bracket: tuple
    probe: float
    evaluations: int

    @property
    def sigma(self):
        return 0.5 * sum(self.sigma_bracket)

    @property
    def width(self):
        return self.sigma_bracket[1] - self.sigma_bracket[0]


class FixedPointSolver:
    """
    Damped Picard iteration with adaptive damping, switching to Newton with a
    forward-difference Jacobian once the residual is small.
    """

    def __init__(self, tol=None, max_iter=None, newton_switch=None, damping_min=None):
        self.tol = Config.TOL if tol is None else tol
        self.max_iter = Config.MAX_ITER if max_iter is None else max_iter
        self.newton_switch = Config.NEWTON_SWITCH if newton_switch is None else newton_switch
        self.damping_min = Config.DAMPING_MIN if damping_min is None else damping_min
        self.damping_max = Config.DAMPING_MAX
        self.damping_growth = Config.DAMPING_GROWTH
        self.fd_step = Config.FD_STEP

    # ---------------------------------------------
    # Finite-rank fixed points
    # ---------------------------------------------
    def solve_fixed_point(self, model, alpha, start=None, tol=None, max_iter=None, q=None):
        model.require_finite_rank('solve')
        q = q or model.grid()
        start = start or MeanField.zeros(model)

        def F(r):
            mu = build_gibbs(model, alpha, MeanField.from_vector(model, r), q)
            return meanfield_of(model, mu).as_vector(), mu

        r, mu, residual, iterations, trace = self._iterate(F, start.as_vector(), tol, max_iter)
        return self._result(model, alpha, MeanField.from_vector(model, r), mu, residual,
                            iterations, trace, tol)

    def solve_trivial_branch(self, model, alpha, start=None, tol=None, max_iter=None, q=None):
        """Fixed point of the map without K2: r_k pinned at 0, only r_v iterated."""
        model.require_finite_rank('solve')
        q = q or model.grid()
        r_k = np.zeros(model.m)
        r_v0 = np.zeros(model.l) if start is None else np.asarray(start.r_v, dtype=float)

        def F(r_v):
            mu = build_gibbs(model, alpha, MeanField(r_v, r_k), q)
            return meanfield_of(model, mu).r_v, mu

        r_v, mu, residual, iterations, trace = self._iterate(F, r_v0, tol, max_iter)
        return self._result(model, alpha, MeanField(r_v, r_k), mu, residual,
                            iterations, trace, tol)

    def multi_start_solve(self, model, alpha, starts, tol=None, max_iter=None, q=None):
        if not starts:
            raise ArgumentError('multi_start_solve needs at least one start', 'solve')
        tol = self.tol if tol is None else tol
        q = q or model.grid()
        results = [self.solve_fixed_point(model, alpha, start, tol, max_iter, q) for start in starts]
        distinct = distinct_solutions(results, 10 * tol)
        dropped = sum(not r.converged for r in results)
        logger.info(f"alpha={alpha:.6g}: {len(distinct)} distinct fixed point(s) "
                    f"from {len(starts)} start(s), {dropped} not converged")
        return MultiStartResult(alpha=float(alpha), solutions=distinct,
                                attempted=len(starts), dropped=dropped)

    def phase_scan(self, model, alphas, starts, tol=None, max_iter=None, q=None, progress=False):
        """multi_start_solve on each alpha, in the given order."""
        q = q or model.grid()
        results = []
        for alpha in tqdm(alphas, desc='phase scan', disable=not progress):
            results.append(self.multi_start_solve(model, alpha, starts, tol, max_iter, q))
        return results

    # ---------------------------------------------
    # Convolution kernels
    # ---------------------------------------------
    def solve_density_fixed_point(self, model, alpha, tol=None, max_iter=None, q=None):
        """Picard on node densities: rho <- normalize(exp{-theta V0 + alpha H*rho})."""
        if model.is_finite_rank:
            raise ArgumentError(f"model '{model.name}' has a finite-rank kernel; "
                                "use solve_fixed_point", 'solve')
        tol = self.tol if tol is None else tol
        max_iter = self.max_iter if max_iter is None else max_iter
        q = q or model.grid()

        rho = build_gibbs(model, alpha, q=q).density
        mapped = build_convolution_gibbs(model, alpha, rho, q)
        residual = _inf_norm(mapped.density - rho)
        trace = [residual]
        lam = self.damping_max
        iterations = 0
        while residual >= tol and iterations < max_iter:
            iterations += 1
            rho = (1 - lam) * rho + lam * mapped.density
            mapped = build_convolution_gibbs(model, alpha, rho, q)
            new_residual = _inf_norm(mapped.density - rho)
            lam = self._adapt(lam, new_residual > residual)
            residual = new_residual
            trace.append(residual)
            logger.debug(f"density iteration {iterations}: residual={residual:.3e}, damping={lam:.3g}")

        converged = residual < tol
        self._log_outcome(model, alpha, converged, residual, iterations)
        return FixedPointResult(alpha=float(alpha), meanfield=MeanField.empty(), measure=mapped,
                                residual_inf=residual, iterations=iterations,
                                converged=converged, trace=trace)

    # ---------------------------------------------
    # Critical temperature of scalar symmetric models
    # ---------------------------------------------
    def critical_sigma_scan(self, model, sigma_lo, sigma_hi, steps=40, width=1e-4, probe=1e-4):
        """
        Bracket the sigma at which nonzero branches appear, from the sign of
        F(probe) - probe: positive means a nonzero fixed point exists.
        """
        kernel = model.require_finite_rank('scan')
        if model.l != 0 or model.m != 1 or not model.symmetric:
            raise ArgumentError('critical_sigma_scan needs a symmetric model with one k-function', 'scan')
        Validators.validate_count('steps', steps, minimum=2)
        q = model.grid()
        temperature = model.temperature
        evaluations = 0

        def g(sigma):
            nonlocal evaluations
            evaluations += 1
            alpha = temperature.alpha_for_sigma(sigma)
            mf = MeanField(np.zeros(0), [probe])
            return float(selfconsistency_map(model, alpha, mf, q).r_k[0]) - probe

        sigmas = np.linspace(sigma_lo, sigma_hi, steps)
        values = [g(s) for s in sigmas]
        bracket = None
        for i in range(steps - 1):
            if np.sign(values[i]) != np.sign(values[i + 1]):
                bracket = [float(sigmas[i]), float(sigmas[i + 1])]
                g_lo = values[i]
                break
        if bracket is None:
            raise BracketError(f"no change in the number of fixed points for sigma in "
                               f"[{sigma_lo}, {sigma_hi}]", (sigma_lo, sigma_hi), 'scan')

        while bracket[1] - bracket[0] >= width:
            mid = 0.5 * (bracket[0] + bracket[1])
            g_mid = g(mid)
            if np.sign(g_mid) == np.sign(g_lo):
                bracket[0], g_lo = mid, g_mid
            else:
                bracket[1] = mid
        alphas = sorted(temperature.alpha_for_sigma(s) for s in bracket)
        logger.info(f"critical sigma in [{bracket[0]:.8g}, {bracket[1]:.8g}] "
                    f"({evaluations} map evaluations, kernel rank {kernel.m})")
        return CriticalSigmaResult(sigma_bracket=tuple(bracket), alpha_bracket=tuple(alphas),
                                   probe=probe, evaluations=evaluations)

    # ---------------------------------------------
    # Iteration core
    # ---------------------------------------------
    def _adapt(self, lam, worse):
        if worse:
            return max(lam / 2, self.damping_min)
        return min(lam * self.damping_growth, self.damping_max)

    def _iterate(self, F, r0, tol=None, max_iter=None):
        tol = self.tol if tol is None else tol
        max_iter = self.max_iter if max_iter is None else max_iter
        Validators.validate_positive('tol', tol)

        r = np.asarray(r0, dtype=float)
        value, mu = F(r)
        residual = _inf_norm(value - r)
        trace = [residual]
        lam = self.damping_max
        iterations = 0
        while residual >= tol and iterations < max_iter:
            iterations += 1
            stepped = False
            if residual < self.newton_switch:
                step = self._newton_step(F, r, value)
                if step is not None:
                    candidate = r + step
                    new_value, new_mu = F(candidate)
                    new_residual = _inf_norm(new_value - candidate)
                    stepped = new_residual < residual
                    if not stepped:
                        logger.debug(f"Newton step rejected ({new_residual:.3e} >= {residual:.3e})")
            if not stepped:
                candidate = (1 - lam) * r + lam * value
                new_value, new_mu = F(candidate)
                new_residual = _inf_norm(new_value - candidate)
                lam = self._adapt(lam, new_residual > residual)
            r, value, mu, residual = candidate, new_value, new_mu, new_residual
            trace.append(residual)
            logger.debug(f"iteration {iterations}: residual={residual:.3e}, "
                         f"{'newton' if stepped else f'picard damping={lam:.3g}'}")
        return r, mu, residual, iterations, trace

    def _newton_step(self, F, r, value):
        """Solve J_R d = -R for R(r) = F(r) - r; None when J_R is singular."""
        R = value - r
        n = r.size
        jac = np.empty((n, n))
        for i in range(n):
            h = self.fd_step * (1 + abs(r[i]))
            shifted = r.copy()
            shifted[i] += h
            shifted_value, _ = F(shifted)
            jac[:, i] = ((shifted_value - shifted) - R) / h
        try:
            if np.linalg.cond(jac) > 1 / np.finfo(float).eps:
                raise np.linalg.LinAlgError('ill-conditioned')
            return np.linalg.solve(jac, -R)
        except np.linalg.LinAlgError:
            logger.warning('Newton Jacobian is singular; falling back to a Picard step')
            return None

    def _result(self, model, alpha, meanfield, mu, residual, iterations, trace, tol):
        tol = self.tol if tol is None else tol
        converged = residual < tol
        self._log_outcome(model, alpha, converged, residual, iterations)
        return FixedPointResult(alpha=float(alpha), meanfield=meanfield, measure=mu,
                                residual_inf=residual, iterations=iterations,
                                converged=converged, trace=trace)

    @staticmethod
    def _log_outcome(model, alpha, converged, residual, iterations):
        if converged:
            logger.info(f"{model.name} alpha={alpha:.6g}: converged in {iterations} "
                        f"iteration(s), residual {residual:.2e}")
        else:
            logger.warning(f"{model.name} alpha={alpha:.6g}: not converged after "
                           f"{iterations} iteration(s), residual {residual:.2e}")


def distinct_solutions(results, radius):
    """Converged results whose mean fields differ pairwise by at least `radius` (inf-norm)."""
    distinct = []
    for result in results:
        if not result.converged:
            continue
        if any(result.meanfield.distance(d.meanfield) < radius for d in distinct):
            continue
        distinct.append(result)
    return distinct


def scalar_starts(model, values):
    """Starts with every r_k component set to one value and r_v at 0."""
    return [MeanField(np.zeros(model.l), np.full(model.m, float(v))) for v in values]


# Singleton instance
fixed_point_solver = FixedPointSolver()
