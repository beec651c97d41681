"""Pointwise checks of the curvature-driven heat-semigroup bounds.

Under ``Hess V >= -K`` the heat flow satisfies the reverse Harnack bound

    (P_t f)^2(x) <= P_t f^2(y) * exp(K d^2(x, y) / (1 - exp(-2 K t)))

the gradient commutation ``|grad P_t f| <= exp(K t) P_t |grad f|``, and, after
integrating the Harnack bound against ``mu`` in ``y``, an upper bound on
``(P_t f)^2 / mu(f^2)`` in terms of ``mu0 = mu(exp(-2 K d^2(x0, .)))``.
Signed K is accepted for the first two checks; the third needs K > 0.
"""

from __future__ import annotations

import numpy as np

from .discretization import grid_gradient_norm
from .reports import CheckReport
from .spectral import SpectralDecomposition, heat_apply

POSITIVE_FLOOR = 1e-30


def harnack_exponent(K: float, t: float, d2):
    """``K d^2 / (1 - exp(-2Kt))``, with the ``K -> 0`` limit ``d^2 / (2t)``."""
    d2 = np.asarray(d2, dtype=float)
    if K == 0:
        return d2 / (2.0 * t)
    return K * d2 / (-np.expm1(-2.0 * K * t))


def random_pairs(n: int, count: int, rng, include_diagonal: bool = True) -> np.ndarray:
    pairs = rng.integers(0, n, size=(count, 2))
    if include_diagonal and count:
        pairs[0, 1] = pairs[0, 0]
    return pairs


def check_harnack(dec: SpectralDecomposition, f, K: float, times, pairs, tolerance: float = 1e-8) -> CheckReport:
    """Log-form Harnack margins over node pairs ``(x, y)`` and times.

    margin = log P_t f^2(y) + K d^2(x,y)/(1 - e^{-2Kt}) - 2 log P_t f(x).
    Pairs where ``P_t f(x)`` or ``P_t f^2(y)`` is below 1e-30 are skipped.
    """
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ValueError("check_harnack needs f >= 0")
    times = [float(t) for t in np.atleast_1d(times)]
    if any(t <= 0 for t in times):
        raise ValueError("Harnack times must be positive")
    pairs = np.asarray(pairs, dtype=int).reshape(-1, 2)
    nodes = dec.grid.nodes
    d2 = np.sum((nodes[pairs[:, 0]] - nodes[pairs[:, 1]]) ** 2, axis=1)
    margins, locs, skipped = [], [], 0
    for t in times:
        pf = heat_apply(dec, f, t)
        pf2 = heat_apply(dec, f * f, t)
        a = pf[pairs[:, 0]]
        b = pf2[pairs[:, 1]]
        ok = (a > POSITIVE_FLOOR) & (b > POSITIVE_FLOOR)
        skipped += int(np.count_nonzero(~ok))
        m = np.log(b[ok]) + harnack_exponent(K, t, d2[ok]) - 2.0 * np.log(a[ok])
        margins.append(m)
        for x, y in pairs[ok]:
            locs.append({"x": int(x), "y": int(y), "t": t})
    return CheckReport.from_margins("harnack", np.concatenate(margins) if margins else [], locs,
                                    tolerance, skipped, K=K)


def check_gradient_commutation(dec: SpectralDecomposition, f, K: float, times,
                               tolerance: float | None = None) -> CheckReport:
    """Margins ``e^{Kt} P_t|grad f| - |grad P_t f|`` at interior nodes.

    Boundary nodes use one-sided differences and are left out of the worst
    margin.  The default tolerance is ``(1e-6 + h^2) * max|grad f|``.
    """
    f = np.asarray(f, dtype=float)
    g = dec.grid
    grad_f = grid_gradient_norm(g, f)
    scale = float(np.max(grad_f)) if grad_f.size else 0.0
    if tolerance is None:
        tolerance = (1e-6 + g.spacing**2) * max(scale, 1e-300)
    inner = np.flatnonzero(g.interior_mask())
    margins, locs = [], []
    for t in np.atleast_1d(times):
        t = float(t)
        if t < 0:
            raise ValueError("times must be nonnegative")
        lhs = grid_gradient_norm(g, heat_apply(dec, f, t))
        rhs = np.exp(K * t) * heat_apply(dec, grad_f, t)
        margins.append((rhs - lhs)[inner])
        locs.extend({"node": int(i), "t": t} for i in inner)
    return CheckReport.from_margins("gradient_commutation", np.concatenate(margins), locs, tolerance,
                                    skipped=int(g.size - inner.size), K=K)


def base_point_mass(dec_or_measure, nodes, K: float, x0) -> float:
    """``mu0 = sum_i mu_i exp(-2 K |x_i - x0|^2)``, in (0, 1] for K >= 0."""
    weights = getattr(dec_or_measure, "measure", dec_or_measure).weights
    d2 = np.sum((np.asarray(nodes) - np.asarray(x0, dtype=float)) ** 2, axis=1)
    return float(weights @ np.exp(-2.0 * K * d2))


def check_pt_upper(dec: SpectralDecomposition, f, K: float, t: float, x0=None,
                   tolerance: float = 1e-8) -> tuple[CheckReport, float]:
    """Check ``(P_t f)^2(x) / mu f^2 <= mu0^{-1/delta} exp(2K d^2(x0, x) / delta)``.

    Here ``delta = 1 - exp(-2Kt)``.  Returns the report and ``mu0``.
    """
    if K <= 0:
        raise ValueError("check_pt_upper needs K > 0")
    if t <= 0:
        raise ValueError("check_pt_upper needs t > 0")
    f = np.asarray(f, dtype=float)
    m = dec.measure
    if x0 is None:
        x0 = dec.generator.potential.x0
    nodes = dec.grid.nodes
    mu0 = base_point_mass(m, nodes, K, x0)
    mass = m.inner(f, f)
    if mass <= 0:
        raise ValueError("mu(f^2) must be positive")
    delta = -np.expm1(-2.0 * K * t)
    d2 = np.sum((nodes - np.asarray(x0, dtype=float)) ** 2, axis=1)
    with np.errstate(over="ignore"):
        rhs = np.exp(-np.log(mu0) / delta + 2.0 * K * d2 / delta)
    lhs = heat_apply(dec, f, t) ** 2 / mass
    rep = CheckReport.from_margins("pt_upper", rhs - lhs, lambda k: {"node": int(k), "t": float(t)},
                                   tolerance, K=K, mu0=mu0)
    return rep, mu0
