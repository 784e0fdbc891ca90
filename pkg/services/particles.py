"""
Euler-Maruyama simulation of the N-particle mean-field system

    dX_i = -[V0'(X_i) + (alpha / theta(alpha)) W'(X_i; empirical measure)] dt + sigma dB_i

with sigma = sqrt(2 / theta(alpha)), so the invariant law of the limit is the
Gibbs map's density. Noise comes from a Philox counter-based generator.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from tqdm import tqdm

from config import Config
from utils.errors import ArgumentError, BlowUpError
from utils.helpers import write_csv
from utils.validators import Validators

logger = logging.getLogger(__name__)

MOMENT_ORDERS = (1, 2, 3, 4)
STIFFNESS_SAMPLES = 2001
CONVOLUTION_CHUNK = 512


@dataclass
class SimConfig:
    model: object
    sigma: float
    N: int = 10_000
    dt: float = 1e-3
    T: float = 50.0
    burn_in: float = 0.2
    seed: int = Config.SEED
    x0: float = 0.0
    batches: int = Config.MIN_BATCHES
    bins: int = 60
    record_every: int = 0
    record_particles: int = 5

    def __post_init__(self):
        self.sigma = Validators.validate_positive('sigma', self.sigma)
        self.N = Validators.validate_count('N', self.N)
        self.dt = Validators.validate_positive('dt', self.dt)
        self.T = Validators.validate_positive('T', self.T)
        self.batches = Validators.validate_count('batches', self.batches, minimum=Config.MIN_BATCHES)
        self.bins = Validators.validate_count('bins', self.bins)
        self.record_every = Validators.validate_count('record_every', self.record_every, minimum=0)
        if not 0 <= self.burn_in < 1:
            raise ArgumentError(f"burn_in must be a fraction in [0, 1), got {self.burn_in}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ArgumentError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    @property
    def beta(self):
        return self.model.beta

    @property
    def steps(self):
        return int(round(self.T / self.dt))

    @property
    def burn_in_steps(self):
        return int(self.steps * self.burn_in)

    def stiffness(self):
        """max |V0''| on [-L, L] from differences of grad_V0."""
        L = self.model.domain_L
        x = np.linspace(-L, L, STIFFNESS_SAMPLES)
        g = np.asarray(self.model.grad_V0(x), dtype=float)
        return float(np.max(np.abs(np.diff(g) / np.diff(x))))

    def check_stability(self):
        product = self.dt * self.stiffness()
        if product >= Config.STABILITY_LIMIT:
            raise ArgumentError(f"dt={self.dt:g} too large: dt * stiffness = {product:.3g} "
                                f"(must stay below {Config.STABILITY_LIMIT})", 'simulate')
        return product


@dataclass
class SimReport:
    model: str
    seed: int
    N: int
    dt: float
    T: float
    sigma: float
    alpha: float
    steps: int
    burn_in_steps: int
    batches: int
    empirical_moments: dict
    histogram_edges: np.ndarray
    histogram_counts: np.ndarray
    final_mean: float
    trajectory_times: Optional[np.ndarray] = None
    trajectory: Optional[np.ndarray] = None

    def moment(self, order):
        return self.empirical_moments[order]

    def to_dict(self):
        return {
            'model': self.model,
            'seed': self.seed,
            'N': self.N,
            'dt': self.dt,
            'T': self.T,
            'sigma': self.sigma,
            'alpha': self.alpha,
            'steps': self.steps,
            'burn_in_steps': self.burn_in_steps,
            'batches': self.batches,
            'empirical_moments': {
                str(k): {'mean': mean, 'se': se} for k, (mean, se) in self.empirical_moments.items()
            },
            'histogram': {
                'edges': self.histogram_edges.tolist(),
                'counts': self.histogram_counts.tolist(),
            },
            'final_mean': self.final_mean,
        }

    def trajectory_csv(self, path=None):
        if self.trajectory is None:
            raise ArgumentError('no trajectory was recorded; set record_every > 0')
        header = ['t'] + [f"x{i}" for i in range(self.trajectory.shape[1])]
        rows = ([float(t)] + row.tolist() for t, row in zip(self.trajectory_times, self.trajectory))
        write_csv(path, header, rows)


# ---------------------------------------------
# Drift
# ---------------------------------------------
def _finite_rank_drift(model, X):
    kernel = model.kernel
    r_v = kernel.v_values(X).mean(axis=1) if model.l else np.zeros(0)
    r_k = kernel.k_moment_values(X).mean(axis=1) if model.m else np.zeros(0)
    return kernel.potential_grad(X, r_v, r_k)


def _convolution_drift(model, X):
    """-(1/N) sum_j H'(X_i - X_j), computed in row chunks."""
    out = np.empty_like(X)
    for start in range(0, X.size, CONVOLUTION_CHUNK):
        block = X[start:start + CONVOLUTION_CHUNK]
        out[start:start + CONVOLUTION_CHUNK] = -np.mean(
            model.kernel.H_prime(block[:, None] - X[None, :]), axis=1)
    return out


def interaction_drift(model, X):
    if model.is_finite_rank:
        return _finite_rank_drift(model, X)
    return _convolution_drift(model, X)


# ---------------------------------------------
# Simulation
# ---------------------------------------------
def _batch_means(series, batches):
    usable = (series.shape[0] // batches) * batches
    if usable == 0:
        raise ArgumentError(f"not enough post burn-in steps for {batches} batches", 'simulate')
    means = series[-usable:].reshape(batches, -1, series.shape[1]).mean(axis=1)
    return means.mean(axis=0), means.std(axis=0, ddof=1) / np.sqrt(batches)


def simulate(cfg, progress=False):
    model = cfg.model
    cfg.check_stability()
    alpha = model.temperature.alpha_for_sigma(cfg.sigma)
    coupling = alpha / model.temperature.theta(alpha)
    escape = Config.ESCAPE_FACTOR * model.domain_L
    steps, burn = cfg.steps, cfg.burn_in_steps

    rng = np.random.Generator(np.random.Philox(int(cfg.seed)))
    X = np.full(cfg.N, float(cfg.x0))
    noise_scale = cfg.sigma * np.sqrt(cfg.dt)
    series = np.empty((steps - burn, len(MOMENT_ORDERS)))
    times, recorded = [], []

    logger.info(f"simulating {model.name}: N={cfg.N}, dt={cfg.dt:g}, T={cfg.T:g}, "
                f"sigma={cfg.sigma:g} (alpha={alpha:.6g}), seed={cfg.seed}")
    for step in tqdm(range(steps), desc='simulate', disable=not progress):
        drift = np.asarray(model.grad_V0(X), dtype=float) + coupling * interaction_drift(model, X)
        X = X - drift * cfg.dt + noise_scale * rng.standard_normal(cfg.N)
        if not np.all(np.abs(X) < escape):
            raise BlowUpError(f"particle escaped beyond {escape:g} at t={(step + 1) * cfg.dt:.4g}; "
                              f"reduce dt={cfg.dt:g}", cfg.dt)
        if step >= burn:
            x2 = X * X
            series[step - burn] = (X.mean(), x2.mean(), (x2 * X).mean(), (x2 * x2).mean())
        if cfg.record_every and step % cfg.record_every == 0:
            times.append((step + 1) * cfg.dt)
            recorded.append(X[:cfg.record_particles].copy())

    means, errors = _batch_means(series, cfg.batches)
    counts, edges = np.histogram(X, bins=cfg.bins, range=(-model.domain_L, model.domain_L))
    moments = {k: (float(m), float(e)) for k, m, e in zip(MOMENT_ORDERS, means, errors)}
    logger.info(f"simulation done: m1={moments[1][0]:.5g}±{moments[1][1]:.2g}, "
                f"m2={moments[2][0]:.5g}±{moments[2][1]:.2g}")
    return SimReport(
        model=model.name, seed=int(cfg.seed), N=cfg.N, dt=cfg.dt, T=cfg.T, sigma=cfg.sigma,
        alpha=float(alpha), steps=steps, burn_in_steps=burn, batches=cfg.batches,
        empirical_moments=moments, histogram_edges=edges, histogram_counts=counts,
        final_mean=float(X.mean()),
        trajectory_times=np.array(times) if recorded else None,
        trajectory=np.array(recorded) if recorded else None,
    )
