"""Lyapunov functions from an LSI through the Schrodinger operator ``H = -L + phi``.

Given ``2 rho Ent(f^2) <= E(f, f)`` and an exponent ``c`` with
``mu(exp(c d^2)) < inf``, set ``b = 2 mu(exp(c d^2))`` and
``phi = rho (-c d^2 + b)``.  The solution of ``H u = 1`` is positive and
satisfies ``L u = phi u - 1 <= (-rho c d^2 + rho b) u``.

On the grid ``H`` is a Z-matrix (nonpositive off-diagonals).  When its
symmetrized form is positive definite it is a Stieltjes matrix, whose inverse
is entrywise nonnegative, so ``u = H^{-1} 1 > 0`` at every node.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .discretization import Generator, dirichlet_form
from .lyapunov import LyapunovCertificate, verify_lyapunov
from .reports import CheckReport
from .spectral import symmetrized

# H counts as positive definite when lambda_min(H) > PD_TOLERANCE * ||H||.
PD_TOLERANCE = 1e-10


class IndefiniteOperatorError(ArithmeticError):
    """The symmetrized Schrodinger operator is not (numerically) positive definite."""

    def __init__(self, message: str, smallest_eigenvalue: float, threshold: float):
        super().__init__(message)
        self.smallest_eigenvalue = smallest_eigenvalue
        self.threshold = threshold


class ResidualError(ArithmeticError):
    pass


@dataclass
class SchroedingerProblem:
    rho: float
    c: float
    b: float
    phi: np.ndarray = field(repr=False)
    d2: np.ndarray = field(repr=False)
    tail_decreasing: bool = True
    generator: Generator | None = field(default=None, repr=False)

    @property
    def H(self) -> sp.csr_matrix:
        """``-L + diag(phi)`` in nodal coordinates."""
        return (-self.generator.matrix + sp.diags(self.phi)).tocsr()

    def symmetric(self) -> sp.csr_matrix:
        """``D H D^-1`` with ``D = diag(sqrt(mu))``."""
        return (symmetrized(self.generator) + sp.diags(self.phi)).tocsr()


def schroedinger_potential(gen: Generator, rho: float, c: float) -> SchroedingerProblem:
    """Build ``phi = rho (-c d^2 + b)`` with ``b = 2 sum_i mu_i exp(c d_i^2)``.

    ``tail_decreasing`` reports whether the density ``exp(-V + c d^2)``
    still decreases outward at every boundary node, a proxy for the
    continuum integral being finite.
    """
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    if not c > 0:
        raise ValueError(f"c must be positive, got {c}")
    m = gen.measure
    d2 = np.sum((gen.grid.nodes - gen.potential.x0) ** 2, axis=1)
    log_terms = np.log(m.weights) + c * d2
    if log_terms.max() > 700:
        raise OverflowError(f"exp(c d^2) overflows on the grid for c = {c}; reduce c or the radius")
    terms = np.exp(log_terms)
    b = 2.0 * float(terms.sum())
    phi = rho * (-c * d2 + b)
    # the density exp(-V + c d^2) must still decrease outward at every boundary
    # node; cell weights are left out since boundary cells are half cells
    grid_terms = (c * d2 - gen.potential.value(gen.grid.nodes)).reshape(gen.grid.shape())
    tail_decreasing = True
    for axis in range(gen.grid.dim):
        t = np.moveaxis(grid_terms, axis, 0)
        tail_decreasing &= bool(np.all(t[0] < t[1] - 1e-12) and np.all(t[-1] < t[-2] - 1e-12))
    return SchroedingerProblem(float(rho), float(c), b, phi, d2, tail_decreasing, gen)


def smallest_eigenvalue(prob: SchroedingerProblem) -> float:
    s = prob.symmetric()
    if prob.generator.grid.dim == 1:
        vals = sla.eigvalsh_tridiagonal(s.diagonal(), s.diagonal(1), select="i", select_range=(0, 0))
        return float(vals[0])
    if s.shape[0] <= 4096:
        return float(sla.eigh(s.toarray(), eigvals_only=True, subset_by_index=[0, 0])[0])
    return float(spla.eigsh(s.tocsc(), k=1, which="SA", return_eigenvectors=False)[0])


def operator_norm_bound(prob: SchroedingerProblem) -> float:
    """Infinity norm of the symmetrized operator (Gershgorin bound on its spectrum)."""
    s = prob.symmetric()
    return float(np.max(np.asarray(abs(s).sum(axis=1)).ravel()))


@dataclass
class ConverseResult:
    u: np.ndarray = field(repr=False)
    certificate: LyapunovCertificate
    problem: SchroedingerProblem
    lambda_min: float
    residual: float
    relative_residual: float

    def to_dict(self) -> dict:
        return {
            "rho": self.problem.rho,
            "c": self.problem.c,
            "b": self.problem.b,
            "tail_decreasing": self.problem.tail_decreasing,
            "lambda_min": self.lambda_min,
            "residual": self.residual,
            "relative_residual": self.relative_residual,
            "min_u": float(self.u.min()),
            "max_u": float(self.u.max()),
            "certificate": self.certificate.to_dict(),
        }


def solve_lyapunov_from_lsi(gen: Generator, prob: SchroedingerProblem, residual_tol: float = 1e-10,
                            refinements: int = 3) -> ConverseResult:
    """Solve ``H u = 1`` and return ``u`` with its Lyapunov certificate.

    The certificate has constants ``(rho c, rho b)`` and is checked at every
    node, boundary included, since ``L u = phi u - 1`` holds exactly there too.

    Raises
    ------
    IndefiniteOperatorError
        ``lambda_min(H) <= 1e-10 ||H||``: the LSI strength ``rho`` (or the
        exponent ``c``) is not compatible with this measure.
    ResidualError
        ``||H u - 1||_inf`` exceeds ``residual_tol * ||u||_inf ||H||_inf``.
    """
    lam = smallest_eigenvalue(prob)
    norm = operator_norm_bound(prob)
    threshold = PD_TOLERANCE * norm
    if lam <= threshold:
        raise IndefiniteOperatorError(
            f"Schrodinger operator -L + phi is not positive definite: smallest eigenvalue "
            f"{lam:.3e} <= {threshold:.3e}", lam, threshold)
    root = np.sqrt(gen.measure.weights)
    s = prob.symmetric()
    n = gen.size
    if gen.grid.dim == 1:
        banded = np.zeros((2, n))
        banded[0, 1:] = s.diagonal(1)
        banded[1] = s.diagonal()
        factor = sla.cholesky_banded(banded)

        def solve_sym(rhs):
            return sla.cho_solve_banded((factor, False), rhs)
    else:
        lu = spla.splu(s.tocsc())
        solve_sym = lu.solve

    H = prob.H
    ones = np.ones(n)
    u = solve_sym(root) / root
    for _ in range(refinements):
        r = ones - H @ u
        if np.max(np.abs(r)) <= 1e-16 * np.max(np.abs(u)) * norm:
            break
        u = u + solve_sym(root * r) / root
    res = float(np.max(np.abs(H @ u - ones)))
    h_inf = float(abs(H).sum(axis=1).max())
    rel = res / (float(np.max(np.abs(u))) * h_inf)
    if rel > residual_tol:
        raise ResidualError(f"relative residual {rel:.3e} exceeds {residual_tol:.1e}")
    if not np.all(u > 0):
        # cannot happen for a positive-definite Z-matrix; signals a solver problem
        raise ResidualError(f"solution has {int(np.sum(u <= 0))} nonpositive entries")
    cert = verify_lyapunov(gen, u, prob.rho * prob.c, prob.rho * prob.b, include_boundary=True)
    return ConverseResult(u, cert, prob, lam, res, rel)


def coercivity_check(gen: Generator, prob: SchroedingerProblem, u, tolerance: float = 1e-8) -> CheckReport:
    """Lower and upper bounds on the quadratic form ``<u, H u>_mu``.

    Margins: ``<u,Hu> - (E(u) + rho b mu u^2) / 2`` and
    ``E(u) + rho b mu u^2 - <u,Hu>``.  Both are scaled by ``mu u^2``.
    """
    u = np.asarray(u, dtype=float)
    m = gen.measure
    quad = m.inner(u, prob.H @ u)
    energy = dirichlet_form(gen, u)
    mass = m.inner(u, u)
    upper = energy + prob.rho * prob.b * mass
    margins = np.array([quad - 0.5 * upper, upper - quad]) / mass
    return CheckReport.from_margins("coercivity", margins, [{"bound": "lower"}, {"bound": "upper"}], tolerance,
                                    quadratic_form=quad, energy=energy, mass=mass)


def herbst_ladder(rho: float, steps: int = 24) -> list[float]:
    """Candidate exponents ``rho/2, rho, 2 rho, ...``."""
    return [rho * 2.0 ** (k - 1) for k in range(steps)]


def scan_herbst_exponent(gen: Generator, rho: float, ladder=None,
                         residual_tol: float = 1e-10) -> tuple[ConverseResult, list[dict]]:
    """Largest ladder exponent with a decreasing tail and a positive-definite ``H``."""
    ladder = herbst_ladder(rho) if ladder is None else list(ladder)
    log_rows, best = [], None
    for c in sorted(ladder):
        row = {"c": c}
        try:
            prob = schroedinger_potential(gen, rho, c)
        except OverflowError as exc:
            row["status"] = f"overflow: {exc}"
            log_rows.append(row)
            break
        if not prob.tail_decreasing:
            row["status"] = "tail not decreasing"
            log_rows.append(row)
            break
        try:
            best = solve_lyapunov_from_lsi(gen, prob, residual_tol)
            row["status"] = "ok"
            row["lambda_min"] = best.lambda_min
        except IndefiniteOperatorError as exc:
            row["status"] = "indefinite"
            row["lambda_min"] = exc.smallest_eigenvalue
        log_rows.append(row)
    if best is None:
        lams = [r["lambda_min"] for r in log_rows if "lambda_min" in r]
        err = IndefiniteOperatorError("Schrodinger operator -L + phi is not positive definite for any "
                                      "exponent on the ladder", max(lams, default=float("nan")), float("nan"))
        err.rows = log_rows
        raise err
    return best, log_rows
