"""Uniform grids, the discrete Gibbs measure and the finite-volume generator.

The generator uses edge-midpoint weights ``exp(-V(midpoint))``.  Writing
``cond_ij = exp(-V(m_ij)) h^(dim-2) / Z`` for the normalized edge
conductance, every quantity below is assembled from the same conductances:

    (L f)_i = (1 / mu_i) * sum_j cond_ij (f_j - f_i)
    E(f, g) = sum_edges cond_ij (f_j - f_i)(g_j - g_i)

so ``mu_i L_ij = cond_ij = mu_j L_ji`` and ``E(f, g) = -<f, L g>_mu`` hold up
to rounding.  Boundary nodes only see interior edges (reflecting ends).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.special import xlogy

from .potentials import PotentialSpec


@dataclass(frozen=True)
class Grid:
    dim: int
    radius: float
    points: int
    nodes: np.ndarray = field(repr=False)
    spacing: float = 0.0

    @property
    def size(self) -> int:
        return self.points**self.dim

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.radius, self.radius, self.points)

    @property
    def x(self) -> np.ndarray:
        """Node coordinates along the first axis (the whole grid in 1D)."""
        return self.nodes[:, 0]

    def interior_mask(self) -> np.ndarray:
        idx = np.indices((self.points,) * self.dim).reshape(self.dim, -1)
        return np.all((idx > 0) & (idx < self.points - 1), axis=0)

    def shape(self) -> tuple[int, ...]:
        return (self.points,) * self.dim


def build_grid(dim: int, radius: float, points: int, max_nodes: int | None = None) -> Grid:
    """Uniform tensor grid on ``[-radius, radius]^dim`` with ``points`` nodes per axis.

    ``max_nodes`` is a resource guard: raise if ``points**dim`` exceeds it.
    """
    if dim not in (1, 2):
        raise ValueError(f"dim must be 1 or 2, got {dim}")
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    if points < 3:
        raise ValueError(f"need at least 3 points per axis, got {points}")
    if max_nodes is not None and points**dim > max_nodes:
        raise ValueError(f"{points**dim} nodes exceed the budget of {max_nodes}")
    axis = np.linspace(-radius, radius, points)
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=1)
    nodes.setflags(write=False)
    return Grid(dim, float(radius), int(points), nodes, 2.0 * radius / (points - 1))


@dataclass(frozen=True)
class WeightedMeasure:
    """Normalized node weights ``mu_i`` proportional to ``exp(-V(x_i)) h^dim``.

    ``log_Z`` is the log of the normalization of the unshifted weights and
    ``vmin`` the shift subtracted from V before exponentiating.
    """

    weights: np.ndarray = field(repr=False)
    log_Z: float
    vmin: float
    tail_indicator: float

    @property
    def normalization(self) -> float:
        return float(np.exp(self.log_Z))

    def mean(self, f) -> float:
        return float(self.weights @ np.asarray(f, dtype=float))

    def inner(self, f, g) -> float:
        return float(self.weights @ (np.asarray(f, dtype=float) * np.asarray(g, dtype=float)))

    def norm(self, f) -> float:
        return float(np.sqrt(self.inner(f, f)))


def cell_volumes(g: Grid) -> np.ndarray:
    """Trapezoid cell volumes: ``h^dim``, halved once per axis on which a node is at the boundary.

    Half cells at the ends make the reflecting boundary second-order accurate;
    full cells there would lengthen the effective domain by ``h``.
    """
    idx = np.indices(g.shape()).reshape(g.dim, -1)
    halves = np.sum((idx == 0) | (idx == g.points - 1), axis=0)
    return g.spacing**g.dim * 0.5**halves


def build_measure(p: PotentialSpec, g: Grid) -> WeightedMeasure:
    """Normalized weights ``mu_i`` proportional to ``exp(-V(x_i))`` times the cell volume of node i."""
    v = p.value(g.nodes)
    if not np.all(np.isfinite(v)):
        raise FloatingPointError("potential is not finite on the grid")
    vmin = float(v.min())
    w = np.exp(-(v - vmin)) * cell_volumes(g)
    z = w.sum()
    weights = w / z
    weights.setflags(write=False)
    boundary = ~g.interior_mask()
    tail = float(np.exp(-(v[boundary] - vmin)).max())
    return WeightedMeasure(weights, float(np.log(z) - vmin), vmin, tail)


@dataclass(frozen=True)
class Generator:
    grid: Grid
    measure: WeightedMeasure
    potential: PotentialSpec
    matrix: sp.csr_matrix = field(repr=False)
    edges: np.ndarray = field(repr=False)
    conductance: np.ndarray = field(repr=False)
    log_edge_ratio: np.ndarray = field(repr=False)

    def apply(self, f) -> np.ndarray:
        return self.matrix @ np.asarray(f, dtype=float)

    __call__ = apply

    @property
    def size(self) -> int:
        return self.grid.size


def _grid_edges(g: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-neighbour edges (i, j) with i < j, and the edge midpoints."""
    idx = np.arange(g.size).reshape(g.shape())
    pairs = []
    for axis in range(g.dim):
        lo = np.take(idx, np.arange(g.points - 1), axis=axis).ravel()
        hi = np.take(idx, np.arange(1, g.points), axis=axis).ravel()
        pairs.append(np.stack([lo, hi], axis=1))
    edges = np.concatenate(pairs)
    mids = 0.5 * (g.nodes[edges[:, 0]] + g.nodes[edges[:, 1]])
    return edges, mids


def build_generator(p: PotentialSpec, g: Grid, m: WeightedMeasure | None = None) -> Generator:
    """Finite-volume discretization of ``L = Laplacian - grad V . grad``."""
    if m is None:
        m = build_measure(p, g)
    edges, mids = _grid_edges(g)
    v_nodes = p.value(g.nodes)
    v_mid = p.value(mids)
    i, j = edges[:, 0], edges[:, 1]
    log_cond = -(v_mid - m.vmin) + (g.dim - 2) * np.log(g.spacing)
    cond = np.exp(log_cond - (m.log_Z + m.vmin))
    # log of cond_ij / sqrt(mu_i mu_j): entries of the symmetrized operator
    log_cell = np.log(cell_volumes(g)) - g.dim * np.log(g.spacing)
    log_ratio = (-v_mid + 0.5 * (v_nodes[i] + v_nodes[j]) - 2.0 * np.log(g.spacing)
                 - 0.5 * (log_cell[i] + log_cell[j]))
    mu = m.weights
    n = g.size
    rows = np.concatenate([i, j])
    cols = np.concatenate([j, i])
    vals = np.concatenate([cond / mu[i], cond / mu[j]])
    off = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    diag = -np.asarray(off.sum(axis=1)).ravel()
    mat = (off + sp.diags(diag)).tocsr()
    return Generator(g, m, p, mat, edges, cond, log_ratio)


def dirichlet_form(gen: Generator, f, g=None) -> float:
    """``E(f, g) = sum_edges cond_ij (f_j - f_i)(g_j - g_i)``."""
    f = np.asarray(f, dtype=float)
    i, j = gen.edges[:, 0], gen.edges[:, 1]
    df = f[j] - f[i]
    dg = df if g is None else np.asarray(g, dtype=float)[j] - np.asarray(g, dtype=float)[i]
    return float(np.sum(gen.conductance * df * dg))


def entropy(m: WeightedMeasure, g) -> float:
    """``mu(g log g) - mu(g) log mu(g)`` for ``g >= 0``, with ``0 log 0 = 0``."""
    g = np.asarray(g, dtype=float)
    if np.any(g < 0):
        raise ValueError("entropy needs a nonnegative function")
    mass = float(m.weights @ g)
    val = float(m.weights @ xlogy(g, g)) - float(xlogy(mass, mass))
    return max(val, 0.0)


def variance(m: WeightedMeasure, f) -> float:
    f = np.asarray(f, dtype=float)
    mean = float(m.weights @ f)
    return max(float(m.weights @ (f - mean) ** 2), 0.0)


def grid_gradient(g: Grid, f) -> np.ndarray:
    """Gradient of nodal values, shape (n, dim).

    Central differences inside, one-sided differences on the boundary.
    """
    vals = np.asarray(f, dtype=float).reshape(g.shape())
    comps = [np.gradient(vals, g.spacing, axis=a, edge_order=1).ravel() for a in range(g.dim)]
    return np.stack(comps, axis=1)


def grid_gradient_norm(g: Grid, f) -> np.ndarray:
    return np.linalg.norm(grid_gradient(g, f), axis=1)


def second_difference(g: Grid, f) -> np.ndarray:
    """Centered second difference in 1D; zero on the two end nodes."""
    if g.dim != 1:
        raise ValueError("second_difference is one-dimensional")
    f = np.asarray(f, dtype=float)
    out = np.zeros_like(f)
    out[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / g.spacing**2
    return out
