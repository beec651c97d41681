"""Quadratic Lyapunov certificates ``L W <= (-c d^2(x, x0) + b) W``.

The condition is checked pointwise at grid nodes.  Boundary nodes are left
out of the margins because the reflecting stencil distorts ``L W`` there;
the number excluded is recorded on the certificate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .discretization import Generator, dirichlet_form
from .reports import CheckReport


class LyapunovError(ValueError):
    """A candidate that is not positive or violates the drift condition."""

    def __init__(self, message: str, certificate: "LyapunovCertificate | None" = None):
        super().__init__(message)
        self.certificate = certificate


@dataclass
class LyapunovCertificate:
    W: np.ndarray = field(repr=False)
    c: float
    b: float
    x0: np.ndarray
    margin: np.ndarray = field(repr=False)
    interior: np.ndarray = field(repr=False)
    tolerance: float = 1e-8

    @property
    def r_star(self) -> float:
        """Radius ``sqrt(b / c)`` where the drift bound changes sign."""
        return float(np.sqrt(self.b / self.c))

    @property
    def ball_radius(self) -> float:
        """Radius of the ball in the indicator form ``-c + (c + b) 1_B``."""
        return float(np.sqrt((self.b + self.c) / self.c))

    @property
    def min_W(self) -> float:
        return float(self.W.min())

    @property
    def scaled_margin(self) -> np.ndarray:
        """Margins divided by ``max W``; the drift condition is homogeneous in W."""
        return self.margin / float(np.max(self.W))

    @property
    def worst_scaled_margin(self) -> float:
        return float(self.scaled_margin[self.interior].min())

    @property
    def excluded(self) -> int:
        return int(np.count_nonzero(~self.interior))

    @property
    def passed(self) -> bool:
        return self.worst_scaled_margin >= -self.tolerance

    def to_dict(self) -> dict:
        worst = int(np.flatnonzero(self.interior)[np.argmin(self.scaled_margin[self.interior])])
        return {
            "c": self.c,
            "b": self.b,
            "x0": [float(v) for v in self.x0],
            "r_star": self.r_star,
            "min_W": self.min_W,
            "worst_scaled_margin": self.worst_scaled_margin,
            "worst_node": worst,
            "excluded_boundary_nodes": self.excluded,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def _squared_distance(gen: Generator, x0) -> np.ndarray:
    x0 = gen.potential.x0 if x0 is None else np.atleast_1d(np.asarray(x0, dtype=float))
    return np.sum((gen.grid.nodes - x0) ** 2, axis=1)


def verify_lyapunov(gen: Generator, W, c: float, b: float, x0=None, tolerance: float = 1e-8,
                    include_boundary: bool = False, raise_on_failure: bool = True) -> LyapunovCertificate:
    """Pointwise check of the quadratic drift condition for ``W`` on the grid.

    Raises :class:`LyapunovError` when ``W`` has a nonpositive entry, or when
    an included margin is below ``-tolerance * max W``.
    """
    W = np.asarray(W, dtype=float)
    if not np.all(W > 0):
        raise LyapunovError("Lyapunov candidate must be strictly positive")
    if not c > 0:
        raise LyapunovError(f"c must be positive, got {c}")
    if b < 0:
        raise LyapunovError(f"b must be nonnegative, got {b}")
    x0 = gen.potential.x0 if x0 is None else np.atleast_1d(np.asarray(x0, dtype=float))
    d2 = _squared_distance(gen, x0)
    margin = (-c * d2 + b) * W - gen.apply(W)
    interior = np.ones(gen.size, bool) if include_boundary else gen.grid.interior_mask()
    cert = LyapunovCertificate(W, float(c), float(b), x0, margin, interior, tolerance)
    if raise_on_failure and not cert.passed:
        k = int(np.flatnonzero(interior)[np.argmin(cert.scaled_margin[interior])])
        raise LyapunovError(
            f"drift condition violated at node {k} (x={gen.grid.nodes[k].tolist()}): "
            f"scaled margin {cert.scaled_margin[k]:.3e}", cert)
    return cert


DEFAULT_A_GRID = (1 / 16, 1 / 8, 1 / 4, 3 / 8)
DEFAULT_C_LADDER = (1 / 64, 1 / 32, 1 / 16, 1 / 8, 3 / 16, 1 / 4, 3 / 8, 1 / 2, 3 / 4, 1.0)


def drift_ratio(gen: Generator, W) -> np.ndarray:
    """``(L W) / W`` at every node."""
    W = np.asarray(W, dtype=float)
    return gen.apply(W) / W


def smallest_b(ratio: np.ndarray, d2: np.ndarray, c: float) -> tuple[float, int]:
    s = ratio + c * d2
    k = int(np.argmax(s))
    return max(float(s[k]), 0.0), k


def fit_lyapunov_exponential(gen: Generator, a_grid=DEFAULT_A_GRID, c_ladder=DEFAULT_C_LADDER,
                             include_boundary: bool = False, outer_fraction: float = 0.9,
                             slack: float = 1e-2, tolerance: float = 1e-8) -> LyapunovCertificate:
    """Fit ``W = exp(a d^2)`` and pick the certificate with the largest c.

    For each ``a`` and each ``c`` in the ladder, ``b(c)`` is the maximum over
    the included nodes of ``LW/W + c d^2``.  On a finite grid that maximum is
    always finite, so a pair counts as feasible only when the maximum over
    the outer shell ``d > outer_fraction * R`` does not exceed the maximum
    over the inner region by more than ``slack * (1 + |b|)``: a condition
    that keeps growing at the truncation radius cannot hold on all of space.
    Ties in c go to the smaller b.
    """
    d2 = _squared_distance(gen, None)
    mask = np.ones(gen.size, bool) if include_boundary else gen.grid.interior_mask()
    dist = np.sqrt(d2)
    outer = mask & (dist > outer_fraction * gen.grid.radius)
    inner = mask & ~outer
    if not inner.any() or not outer.any():
        raise LyapunovError("grid too coarse to separate inner region and outer shell")
    best = None
    tried = []
    for a in a_grid:
        if not a > 0:
            raise ValueError("a_grid entries must be positive")
        with np.errstate(over="raise"):
            try:
                W = np.exp(a * d2)
            except FloatingPointError:
                continue
        ratio = drift_ratio(gen, W)
        for c in c_ladder:
            s = ratio + c * d2
            b_in = float(s[inner].max())
            b_out = float(s[outer].max())
            feasible = b_out <= b_in + slack * (1.0 + abs(b_in))
            tried.append((a, c, feasible))
            if not feasible:
                continue
            b = max(b_in, b_out, 0.0)
            key = (c, -b)
            if best is None or key > best[0]:
                best = (key, a, c, b, W)
    if best is None:
        raise LyapunovError(f"no feasible (a, c, b) among {len(tried)} candidates")
    _, a, c, b, W = best
    cert = verify_lyapunov(gen, W, c, b, tolerance=tolerance, include_boundary=include_boundary)
    cert.exponent = a
    return cert


def check_translya(gen: Generator, cert: LyapunovCertificate, h_funcs, tolerance: float = 1e-8) -> CheckReport:
    """Margins ``E(h,h)/c + (b/c) mu(h^2) - mu(h^2 d^2)`` for each ``h``."""
    m = gen.measure
    d2 = _squared_distance(gen, cert.x0)
    margins = []
    for h in h_funcs:
        h = np.asarray(h, dtype=float)
        h2 = h * h
        margins.append(dirichlet_form(gen, h) / cert.c + cert.b / cert.c * m.mean(h2) - m.mean(h2 * d2))
    return CheckReport.from_margins("translya", margins, lambda k: {"function": int(k)}, tolerance,
                                    c=cert.c, b=cert.b)


def check_indicator_form(gen: Generator, cert: LyapunovCertificate, radius: float | None = None,
                         tolerance: float = 1e-8) -> CheckReport:
    """Check ``L W <= [-c + (c + b) 1_{d <= r}] W`` at the certificate's interior nodes.

    ``radius`` defaults to ``sqrt((b + c) / c)``, the smallest radius for
    which the drift bound implies this form.  Pass ``radius=1`` to test the
    unit-ball version.
    """
    r = cert.ball_radius if radius is None else float(radius)
    d2 = _squared_distance(gen, cert.x0)
    W = cert.W
    bound = (-cert.c + (cert.c + cert.b) * (d2 <= r * r)) * W
    margin = (bound - gen.apply(W)) / float(np.max(W))
    idx = np.flatnonzero(cert.interior)
    return CheckReport.from_margins("indicator_form", margin[idx], lambda k: {"node": int(idx[k])}, tolerance,
                                    radius=r)
