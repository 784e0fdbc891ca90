"""
Gibbs-type measures on the shared quadrature grid.

Densities are stored as node vectors together with their log-density, so
tails that underflow in `density` stay available through `log_density`.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from services.quadrature import evaluate_on, integrate
from utils.errors import ArgumentError, NumericError
from utils.helpers import write_csv

logger = logging.getLogger(__name__)


# ---------------------------------------------
# Mean-field vectors
# ---------------------------------------------
@dataclass(frozen=True, eq=False)
class MeanField:
    """r_v = mu(v_j), r_k = mu(k~_j)."""
    r_v: np.ndarray = field(default_factory=lambda: np.zeros(0))
    r_k: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        r_v = np.atleast_1d(np.asarray(self.r_v, dtype=float)).copy()
        r_k = np.atleast_1d(np.asarray(self.r_k, dtype=float)).copy()
        if not (np.all(np.isfinite(r_v)) and np.all(np.isfinite(r_k))):
            raise NumericError(f"mean field has non-finite entries: r_v={r_v}, r_k={r_k}")
        r_v.setflags(write=False)
        r_k.setflags(write=False)
        object.__setattr__(self, 'r_v', r_v)
        object.__setattr__(self, 'r_k', r_k)

    @classmethod
    def zeros(cls, model):
        return cls(np.zeros(model.l), np.zeros(model.m))

    @classmethod
    def from_vector(cls, model, vector):
        vector = np.asarray(vector, dtype=float)
        return cls(vector[:model.l], vector[model.l:model.l + model.m])

    @classmethod
    def empty(cls):
        return cls()

    def as_vector(self):
        return np.concatenate([self.r_v, self.r_k])

    def flipped(self):
        """Same r_v, sign-flipped r_k (the mirror image for symmetric models)."""
        return MeanField(self.r_v, -self.r_k)

    def distance(self, other):
        a, b = self.as_vector(), other.as_vector()
        return float(np.max(np.abs(a - b))) if a.size else 0.0

    def to_dict(self):
        return {'r_v': self.r_v.tolist(), 'r_k': self.r_k.tolist()}

    def __repr__(self):
        return f"MeanField(r_v={self.r_v.tolist()}, r_k={self.r_k.tolist()})"


# ---------------------------------------------
# Measures
# ---------------------------------------------
@dataclass(frozen=True, eq=False)
class GibbsMeasure:
    """
    A normalized density on quadrature nodes.

    `log_density` is finite at every node and is where strict positivity
    lives. `density` is its exponential and may underflow to 0.0 far in
    the tails; integrals over it are still exact to double precision.
    """
    quadrature: object
    density: np.ndarray
    log_density: np.ndarray
    log_norm: float
    alpha: float
    meanfield: MeanField

    @property
    def nodes(self):
        return self.quadrature.nodes

    @property
    def weights(self):
        return self.quadrature.weights

    def moment(self, f):
        return moment(self, f)

    def moments(self, orders):
        x = self.nodes
        return {k: moment(self, x ** k) for k in orders}

    def to_csv(self, path=None):
        write_csv(path, ['x', 'density'], zip(self.nodes.tolist(), self.density.tolist()))


def measure_from_log_density(q, log_density, alpha, meanfield):
    """Normalize exp(log_density) on `q` with log-sum-exp stabilization."""
    log_density = np.asarray(log_density, dtype=float)
    bad = ~np.isfinite(log_density)
    if np.any(bad):
        node = float(q.nodes[int(np.argmax(bad))])
        raise NumericError(f"log-density is not finite at x={node:.6g}", node=node)
    shift = float(np.max(log_density))
    unnormalized = np.exp(log_density - shift)
    Z = float(unnormalized @ q.weights)
    if not np.isfinite(Z) or Z <= 0:
        raise NumericError(f"normalizing constant degenerate after stabilization (Z={Z})")
    log_Z = np.log(Z)
    density = unnormalized / Z
    density.setflags(write=False)
    normalized_log = log_density - shift - log_Z
    normalized_log.setflags(write=False)
    return GibbsMeasure(quadrature=q, density=density, log_density=normalized_log,
                        log_norm=shift + log_Z, alpha=float(alpha), meanfield=meanfield)


def build_gibbs(model, alpha, mf=None, q=None):
    """
    Finite-rank map:
        rho ∝ exp{-theta(alpha) V0 - alpha [V1 + v.(J r_v) + k.(G r_k)]}
    For a convolution kernel `mf` is ignored and the kernel-free
    density exp{-theta V0} is returned; use `build_convolution_gibbs`.
    """
    model.temperature.check_alpha(alpha)
    q = q or model.grid()
    x = q.nodes
    log_density = -model.temperature.theta(alpha) * np.asarray(model.V0(x), dtype=float)
    if model.is_finite_rank:
        mf = mf or MeanField.zeros(model)
        if mf.r_v.size != model.l or mf.r_k.size != model.m:
            raise ArgumentError(f"mean field has sizes ({mf.r_v.size}, {mf.r_k.size}), "
                                f"model '{model.name}' needs ({model.l}, {model.m})")
        log_density = log_density - alpha * model.kernel.potential(x, mf.r_v, mf.r_k)
    else:
        mf = MeanField.empty()
    return measure_from_log_density(q, log_density, alpha, mf)


def convolution_field(model, q, density):
    """(H * rho)(x_i) = sum_j H(x_i - x_j) w_j rho_j."""
    return model.kernel.matrix(q.nodes) @ (q.weights * density)


def build_convolution_gibbs(model, alpha, density, q):
    """rho' ∝ exp{-theta(alpha) V0 + alpha (H * rho)}."""
    model.temperature.check_alpha(alpha)
    log_density = (-model.temperature.theta(alpha) * np.asarray(model.V0(q.nodes), dtype=float)
                   + alpha * convolution_field(model, q, density))
    return measure_from_log_density(q, log_density, alpha, MeanField.empty())


# ---------------------------------------------
# Integrals against a measure
# ---------------------------------------------
def moment(mu, f):
    """Integral of f against mu; `f` is a callable or a node vector."""
    values = evaluate_on(mu.quadrature, f)
    return integrate(mu.quadrature, values * mu.density)


def pi_project(mu, f):
    """Centered node vector f - mu(f)."""
    values = evaluate_on(mu.quadrature, f)
    return values - moment(mu, values)


def meanfield_of(model, mu):
    """The mean field a measure induces: its own moments of v_j and k~_j."""
    kernel = model.require_finite_rank()
    x = mu.nodes
    r_v = moment(mu, kernel.v_values(x)) if model.l else np.zeros(0)
    r_k = moment(mu, kernel.k_moment_values(x)) if model.m else np.zeros(0)
    return MeanField(r_v, r_k)


# ---------------------------------------------
# Stationarity diagnostic
# ---------------------------------------------
@dataclass(frozen=True)
class Observable:
    """Test function with analytic first and second derivatives."""
    name: str
    f: Callable
    df: Optional[Callable] = None
    d2f: Optional[Callable] = None

    @classmethod
    def polynomial(cls, k):
        return cls(
            f"x^{k}",
            lambda x: x ** k,
            lambda x: k * x ** (k - 1) if k >= 1 else np.zeros_like(x),
            lambda x: k * (k - 1) * x ** (k - 2) if k >= 2 else np.zeros_like(x),
        )


def drift_potential_grad(model, mu):
    """U'(x) for the density exp(-U) that mu would be if it were a fixed point."""
    x = mu.nodes
    alpha = mu.alpha
    grad = model.temperature.theta(alpha) * np.asarray(model.grad_V0(x), dtype=float)
    if model.is_finite_rank:
        own = meanfield_of(model, mu)
        return grad + alpha * model.kernel.potential_grad(x, own.r_v, own.r_k)
    q = mu.quadrature
    return grad - alpha * (model.kernel.grad_matrix(x) @ (q.weights * mu.density))


def stationarity_residual(mu, model, test_fns):
    """
    For each g: integral of (g'' - U' g') against mu, with U' built from mu's
    own moments. Zero (up to the tails) iff mu is invariant for its generator.
    """
    for g in test_fns:
        if g.df is None or g.d2f is None:
            raise ArgumentError(f"test function '{g.name}' needs analytic first and second derivatives")
    x = mu.nodes
    drift = drift_potential_grad(model, mu)
    residuals = []
    for g in test_fns:
        integrand = np.asarray(g.d2f(x), dtype=float) - drift * np.asarray(g.df(x), dtype=float)
        residuals.append(float(moment(mu, integrand)))
    logger.debug(f"stationarity residuals: {residuals}")
    return residuals
