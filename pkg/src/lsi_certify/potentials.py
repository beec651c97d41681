"""Polynomial confining potentials V, their derivatives and curvature bounds.

Every family is a one-dimensional polynomial ``p``.  In two dimensions the
potential is separable, ``V(x, y) = p(x) + p(y)``, so the Hessian is diagonal
and its smallest eigenvalue is ``min(p''(x), p''(y))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial

FAMILIES = ("gaussian", "double_well", "quartic", "polynomial")

# Smallest K used where the constant chain divides by K.
K_FLOOR = 1e-6


class PotentialError(ValueError):
    """Unknown family or a parameter set giving a non-normalizable measure."""


def _coefficients(family: str, params: dict) -> dict[int, float]:
    params = dict(params)
    if family == "gaussian":
        scale = float(params.pop("scale", 1.0))
        coeffs = {2: 0.5 * scale}
    elif family == "double_well":
        coeffs = {4: float(params.pop("a4", 0.25)), 2: float(params.pop("a2", -0.5))}
    elif family == "quartic":
        coeffs = {4: float(params.pop("a4", 0.25)), 2: float(params.pop("a2", 0.0))}
    elif family == "polynomial":
        coeffs = {}
        for key in list(params):
            if not (key.startswith("a") and key[1:].isdigit()):
                raise PotentialError(f"polynomial coefficient keys are a0, a1, ...; got {key!r}")
            coeffs[int(key[1:])] = float(params.pop(key))
        if not coeffs:
            raise PotentialError("polynomial family needs at least one coefficient")
    else:
        raise PotentialError(f"unknown potential family {family!r}; expected one of {FAMILIES}")
    if params:
        raise PotentialError(f"unexpected parameters for {family}: {sorted(params)}")
    return coeffs


@dataclass(frozen=True)
class PotentialSpec:
    """A potential ``V`` with base point ``x0``; use :func:`make_potential`."""

    family: str
    params: dict
    x0: np.ndarray
    dim: int
    poly: Polynomial = field(repr=False)

    @property
    def degree(self) -> int:
        return self.poly.degree()

    def value(self, x) -> np.ndarray:
        """V at points ``x`` of shape (n, dim) or (n,) in one dimension."""
        x = self._as_points(x)
        return self.poly(x).sum(axis=1)

    def gradient(self, x) -> np.ndarray:
        x = self._as_points(x)
        return self.poly.deriv(1)(x)

    def hessian_diagonal(self, x) -> np.ndarray:
        """Diagonal of Hess V (it is diagonal for separable potentials)."""
        x = self._as_points(x)
        return self.poly.deriv(2)(x)

    def hessian(self, x) -> np.ndarray:
        diag = self.hessian_diagonal(x)
        out = np.zeros(diag.shape + (self.dim,))
        idx = np.arange(self.dim)
        out[:, idx, idx] = diag
        return out

    def min_hessian_eigenvalue(self, x) -> np.ndarray:
        return self.hessian_diagonal(x).min(axis=1)

    def squared_distance(self, x) -> np.ndarray:
        return squared_distance(self, x)

    def _as_points(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            x = x.reshape(1, 1)
        elif x.ndim == 1:
            x = x.reshape(-1, 1) if self.dim == 1 else x.reshape(1, -1)
        if x.shape[1] != self.dim:
            raise ValueError(f"points have dimension {x.shape[1]}, potential has {self.dim}")
        return x


def make_potential(family: str, params: dict | None = None, x0=0.0, dim: int | None = None) -> PotentialSpec:
    """Build a potential from a family name and coefficient map.

    ``gaussian`` takes ``scale`` (V = scale |x|^2 / 2), ``double_well`` and
    ``quartic`` take ``a4`` and ``a2``, ``polynomial`` takes ``a0, a1, ...``
    as monomial coefficients of the per-axis polynomial.

    Raises
    ------
    PotentialError
        Unknown family, or a leading coefficient that is not positive with
        even degree (``exp(-V)`` would not be integrable).
    """
    coeffs = _coefficients(family, params or {})
    degree = max((k for k, v in coeffs.items() if v != 0.0), default=0)
    lead = coeffs.get(degree, 0.0)
    if degree < 2 or degree % 2 or lead <= 0:
        raise PotentialError(
            f"exp(-V) is not integrable: leading term {lead:g} x^{degree} must have "
            "positive coefficient and even degree >= 2"
        )
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if dim is None:
        dim = x0.size
    if dim not in (1, 2):
        raise PotentialError(f"dim must be 1 or 2, got {dim}")
    if x0.size == 1 and dim == 2:
        x0 = np.repeat(x0, 2)
    if x0.size != dim:
        raise PotentialError(f"x0 has {x0.size} coordinates for dim {dim}")
    table = np.zeros(degree + 1)
    for k, v in coeffs.items():
        table[k] = v
    x0.setflags(write=False)
    return PotentialSpec(family, dict(params or {}), x0, dim, Polynomial(table))


def squared_distance(p: PotentialSpec, x) -> np.ndarray:
    """Euclidean ``|x - x0|^2`` for one point or an array of points."""
    x = np.asarray(x, dtype=float)
    if x.ndim <= 1 and x.size == p.dim:
        return float(np.sum((x - p.x0) ** 2))
    pts = p._as_points(x)
    return np.sum((pts - p.x0) ** 2, axis=1)


@dataclass(frozen=True)
class CurvatureBound:
    kappa: float
    K: float
    log_concave: bool
    argmin: float

    @property
    def K_chain(self) -> float:
        """K clamped away from zero for formulas that divide by K."""
        return max(self.K, K_FLOOR)


def curvature_lower_bound(p: PotentialSpec, domain_radius: float) -> CurvatureBound:
    """Infimum of the smallest Hessian eigenvalue over ``[-R, R]^dim``.

    For a separable polynomial this is the minimum of ``p''`` on ``[-R, R]``,
    found exactly from the critical points of ``p''``.  ``K = max(-kappa, 0)``.
    """
    if domain_radius <= 0:
        raise ValueError("domain_radius must be positive")
    d2 = p.poly.deriv(2)
    candidates = [-domain_radius, domain_radius]
    if d2.degree() >= 2:
        for r in d2.deriv(1).roots():
            if abs(r.imag) < 1e-12 and abs(r.real) <= domain_radius:
                candidates.append(float(r.real))
    candidates = np.array(candidates)
    vals = d2(candidates)
    i = int(np.argmin(vals))
    kappa = float(vals[i])
    if abs(kappa) < 1e-14:
        kappa = 0.0
    return CurvatureBound(kappa=kappa, K=max(-kappa, 0.0) + 0.0, log_concave=kappa > 0, argmin=float(candidates[i]))


def default_radius(p: PotentialSpec, tail: float = 1e-12, slack: float = 2.0) -> float:
    """Smallest radius with ``exp(-(V(R) - min V)) < tail`` along each axis, plus a margin.

    The returned R is rounded up to a multiple of 0.25.
    """
    target = -np.log(tail) + slack
    crit = [r.real for r in p.poly.deriv(1).roots() if abs(r.imag) < 1e-12]
    vmin = min([p.poly(0.0)] + [p.poly(r) for r in crit])
    r = 0.25
    while min(p.poly(r), p.poly(-r)) - vmin < target:
        r += 0.25
    return r
