"""
Composite Gauss-Legendre quadrature on a truncated line [-L, L].

All densities, kernels and Nystrom matrices share one grid, so this is
the only place nodes and weights are produced.
"""
from dataclasses import dataclass, field

import numpy as np

from config import Config
from utils.errors import ArgumentError, NumericError
from utils.validators import Validators


@dataclass(frozen=True, eq=False)
class Quadrature:
    nodes: np.ndarray
    weights: np.ndarray
    half_width: float
    nodes_per_panel: int
    panels: int
    node_count: int = field(init=False)

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)
        object.__setattr__(self, 'node_count', int(self.nodes.size))

    def integrate(self, f):
        return integrate(self, f)

    def refined(self, factor=2):
        """Same rule with `factor` times as many panels."""
        return build_grid(self.half_width, self.nodes_per_panel, self.panels * factor)

    def mirror_index(self):
        """Index permutation mapping each node to its reflection -x."""
        return np.arange(self.node_count)[::-1]


def build_grid(L, n=None, panels=None):
    """`panels` equal subintervals of [-L, L], n-point Gauss-Legendre on each."""
    L = Validators.validate_positive('L', L)
    n = Validators.validate_count('n', Config.GRID_NODES if n is None else n, minimum=2)
    panels = Validators.validate_count('panels', Config.GRID_PANELS if panels is None else panels)

    ref_nodes, ref_weights = np.polynomial.legendre.leggauss(n)
    edges = np.linspace(-L, L, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])

    nodes = (mid[:, None] + half[:, None] * ref_nodes[None, :]).ravel()
    weights = (half[:, None] * ref_weights[None, :]).ravel()
    # exact mirror symmetry so odd integrands cancel to rounding
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    return Quadrature(nodes=nodes, weights=weights, half_width=L,
                      nodes_per_panel=n, panels=panels)


def evaluate_on(q, f):
    """Values of `f` at the nodes; `f` may be a callable or a node vector."""
    if callable(f):
        values = np.asarray(f(q.nodes), dtype=float)
        if values.ndim == 0:
            values = np.full(q.node_count, float(values))
    else:
        values = np.asarray(f, dtype=float)
    if values.shape[-1] != q.node_count:
        raise ArgumentError(f"integrand has {values.shape[-1]} values for {q.node_count} nodes")
    return values


def integrate(q, f):
    """Sum of weights * f(nodes); raises on the first non-finite value."""
    values = evaluate_on(q, f)
    bad = ~np.isfinite(values)
    if np.any(bad):
        index = int(np.argmax(bad.reshape(-1, q.node_count).any(axis=0)))
        node = float(q.nodes[index])
        raise NumericError(f"integrand is not finite at node x={node:.6g}", node=node)
    return values @ q.weights
