"""Eigendecomposition of ``-L``, the spectral gap and the heat semigroup ``P_t``.

``-L`` is self-adjoint in L^2(mu), so ``S = D (-L) D^-1`` with
``D = diag(sqrt(mu))`` is a symmetric matrix.  Its eigenvectors ``v_k`` give
mu-orthonormal modes ``v_k / sqrt(mu)``.  The ground state is known exactly
(``sqrt(mu)``, eigenvalue 0); it is used as is so that constants are
transported without error and ``P_t 1 = 1`` to rounding.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .discretization import Generator

log = logging.getLogger(__name__)

DENSE_BUDGET = 4096


class SpectralError(RuntimeError):
    """Eigensolve failure, exhausted budget, or a degenerate spectral gap."""


def symmetrized(gen: Generator) -> sp.csr_matrix:
    """Sparse ``D (-L) D^-1``; off-diagonals ``-exp(log_edge_ratio)``."""
    n = gen.size
    i, j = gen.edges[:, 0], gen.edges[:, 1]
    off = -np.exp(gen.log_edge_ratio)
    diag = -gen.matrix.diagonal()
    rows = np.concatenate([i, j, np.arange(n)])
    cols = np.concatenate([j, i, np.arange(n)])
    vals = np.concatenate([off, off, diag])
    return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


@dataclass
class SpectralDecomposition:
    """Eigenpairs of ``-L`` and the heat flow they generate.

    With the dense backend all eigenpairs are present.  The iterative backend
    keeps only the lowest few and evaluates ``P_t`` by implicit Euler.
    """

    generator: Generator
    eigenvalues: np.ndarray
    vectors: np.ndarray = field(repr=False)
    backend: str = "dense"
    complete: bool = True
    _stepper: object = field(default=None, repr=False)

    @property
    def measure(self):
        return self.generator.measure

    @property
    def grid(self):
        return self.generator.grid

    @property
    def sqrt_mu(self) -> np.ndarray:
        return np.sqrt(self.generator.measure.weights)

    @property
    def modes(self) -> np.ndarray:
        """mu-orthonormal eigenfunctions as columns."""
        return self.vectors / self.sqrt_mu[:, None]

    def mode(self, k: int) -> np.ndarray:
        return self.vectors[:, k] / self.sqrt_mu

    def heat_apply(self, f, t: float) -> np.ndarray:
        return heat_apply(self, f, t)


def _dense_eigh(gen: Generator) -> tuple[np.ndarray, np.ndarray]:
    s = symmetrized(gen)
    if gen.grid.dim == 1:
        d = s.diagonal()
        e = s.diagonal(1)
        return sla.eigh_tridiagonal(d, e, lapack_driver="stemr")
    return sla.eigh(s.toarray())


def decompose(gen: Generator, backend: str = "dense", dense_budget: int = DENSE_BUDGET,
              allow_iterative: bool = False, n_modes: int = 20) -> SpectralDecomposition:
    """Eigendecomposition of ``-L``.

    Parameters
    ----------
    backend : {"dense", "iterative"}
        ``dense`` computes every eigenpair; ``iterative`` computes the lowest
        ``n_modes`` with shift-invert Lanczos and uses a time stepper for P_t.
    allow_iterative : bool
        Fall back to the iterative backend when the dense budget is exceeded.
    """
    if backend not in ("dense", "iterative"):
        raise ValueError(f"unknown spectral backend {backend!r}")
    n = gen.size
    if backend == "dense" and n > dense_budget:
        if not allow_iterative:
            raise SpectralError(f"{n} nodes exceed the dense budget of {dense_budget}")
        log.info("dense budget exceeded (%d > %d); using iterative backend", n, dense_budget)
        backend = "iterative"
    root = np.sqrt(gen.measure.weights)
    root = root / np.linalg.norm(root)
    if backend == "dense":
        try:
            vals, vecs = _dense_eigh(gen)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise SpectralError(f"eigensolve failed: {exc}") from exc
        complete = True
    else:
        k = min(n_modes, n - 2)
        s = symmetrized(gen).tocsc()
        try:
            vals, vecs = spla.eigsh(s, k=k, sigma=-1e-3, which="LM")
        except Exception as exc:  # ARPACK raises several unrelated types
            raise SpectralError(f"iterative eigensolve failed: {exc}") from exc
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
        complete = False
    # replace the computed ground state by the exact one and re-orthogonalize
    vecs = vecs.copy()
    vecs[:, 0] = root
    rest = vecs[:, 1:]
    rest -= np.outer(root, root @ rest)
    rest /= np.linalg.norm(rest, axis=0)
    vals = vals.copy()
    vals[0] = 0.0
    dec = SpectralDecomposition(gen, vals, vecs, backend, complete)
    if not complete:
        dec._stepper = ImplicitEulerFlow(gen)
    return dec


def spectral_gap(dec: SpectralDecomposition) -> float:
    """Smallest nonzero eigenvalue of ``-L``; the inverse Poincare constant."""
    gap = float(dec.eigenvalues[1])
    if gap <= 1e-10:
        raise SpectralError(f"spectral gap {gap:.3e} is not positive; the grid graph looks disconnected")
    return gap


def heat_apply(dec: SpectralDecomposition, f, t: float) -> np.ndarray:
    """``P_t f = sum_k exp(-nu_k t) <f, mode_k>_mu mode_k``.

    The mean is carried separately: ``P_t f = mu(f) + P_t (f - mu(f))``.
    """
    if t < 0:
        raise ValueError("heat_apply needs t >= 0")
    f = np.asarray(f, dtype=float)
    if t == 0:
        return f.copy()
    if not dec.complete:
        return dec._stepper.apply(f, t)
    mu = dec.generator.measure.weights
    root = dec.sqrt_mu
    mean = float(mu @ f) if f.ndim == 1 else mu @ f
    centred = f - mean
    v = dec.vectors[:, 1:]
    coeff = v.T @ (root * centred if f.ndim == 1 else root[:, None] * centred)
    decay = np.exp(-dec.eigenvalues[1:] * t)
    out = v @ (decay * coeff if f.ndim == 1 else decay[:, None] * coeff)
    out = out / (root if f.ndim == 1 else root[:, None])
    return out + mean


def generator_apply_spectral(dec: SpectralDecomposition, f, t: float) -> np.ndarray:
    """``L P_t f`` computed in the eigenbasis (exact time derivative of the flow)."""
    f = np.asarray(f, dtype=float)
    root = dec.sqrt_mu
    mean = float(dec.measure.weights @ f)
    v = dec.vectors[:, 1:]
    coeff = v.T @ (root * (f - mean))
    lam = dec.eigenvalues[1:]
    return (v @ (-lam * np.exp(-lam * t) * coeff)) / root


class ImplicitEulerFlow:
    """Implicit Euler for ``d/dt u = L u`` with step-doubling error control.

    Used only when a full spectrum is unavailable.
    """

    def __init__(self, gen: Generator, rtol: float = 1e-6, dt0: float = 1e-3):
        self.gen = gen
        self.rtol = rtol
        self.dt0 = dt0
        self._factors: dict[float, object] = {}

    def _solve(self, dt: float, u: np.ndarray) -> np.ndarray:
        lu = self._factors.get(dt)
        if lu is None:
            n = self.gen.size
            lu = spla.splu((sp.identity(n, format="csc") - dt * self.gen.matrix).tocsc())
            self._factors[dt] = lu
        return lu.solve(u)

    def apply(self, f, t: float) -> np.ndarray:
        u = np.asarray(f, dtype=float).copy()
        elapsed, dt = 0.0, self.dt0
        while elapsed < t - 1e-15:
            dt = min(dt, t - elapsed)
            full = self._solve(dt, u)
            half = self._solve(dt / 2, self._solve(dt / 2, u))
            err = np.max(np.abs(full - half)) / max(np.max(np.abs(half)), 1e-300)
            if err > self.rtol and dt > 1e-10:
                dt /= 2
                continue
            u = 2 * half - full  # Richardson extrapolation of the two estimates
            elapsed += dt
            if err < self.rtol / 4:
                dt *= 2
        return u
