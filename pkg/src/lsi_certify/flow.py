"""Heat-flow functionals and the derivative identities behind the monotonicity proofs.

All traces evaluate ``phi = P_t f`` with the spectral semigroup, so the only
time discretization is the finite differencing used to compare slopes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import xlogy

from .certify import ConstantChain
from .discretization import dirichlet_form, entropy, grid_gradient, second_difference, variance
from .reports import CheckReport
from .spectral import SpectralDecomposition, heat_apply

TRACE_COLUMNS = ("t", "Phi", "Psi", "Ent_f2", "Ent_star", "Energy", "Theta1", "Theta2")


@dataclass
class FlowTrace:
    times: np.ndarray
    values: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trace times must be strictly increasing")

    @property
    def derivatives(self) -> dict:
        """Centered finite differences in t of every series."""
        if self.times.size < 2:
            return {k: np.zeros_like(v) for k, v in self.values.items()}
        return {k: np.gradient(np.asarray(v), self.times) for k, v in self.values.items()}

    def slopes(self, name: str) -> np.ndarray:
        """Forward difference quotients between consecutive samples."""
        return np.diff(np.asarray(self.values[name])) / np.diff(self.times)

    def nonincreasing(self, name: str, tolerance: float = 0.0) -> bool:
        return bool(np.all(self.slopes(name) <= tolerance))


def entropy_star(m, phi, reference_mass: float) -> float:
    """``mu(phi^2 log(phi^2 / reference_mass))``; never re-normalized along the flow."""
    phi2 = np.asarray(phi, dtype=float) ** 2
    return float(m.weights @ (xlogy(phi2, phi2) - phi2 * math.log(reference_mass)))


def phi_functional(dec: SpectralDecomposition, f, c: float, t: float) -> float:
    """``2 E[sqrt(P_t f)] - c Ent(P_t f)``."""
    pf = np.maximum(heat_apply(dec, f, t), 0.0)
    return 2.0 * dirichlet_form(dec.generator, np.sqrt(pf)) - c * entropy(dec.measure, pf)


def trace_phi(dec: SpectralDecomposition, f, c: float, times) -> FlowTrace:
    """Sample the Bakry-Emery functional along the flow.

    ``flags["monotone"]`` holds when every slope is at most ``1e-8 |Phi(0)|``.
    """
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise ValueError("trace_phi needs a strictly positive f")
    if not c > 0:
        raise ValueError("c must be positive")
    from .potentials import curvature_lower_bound

    curv = curvature_lower_bound(dec.generator.potential, dec.grid.radius)
    if curv.kappa < c:
        warnings.warn(f"Hess V >= {curv.kappa:g} on the grid; Phi need not be monotone for c = {c:g}",
                      stacklevel=2)
    trace = FlowTrace(times)
    trace.values["Phi"] = np.array([phi_functional(dec, f, c, t) for t in trace.times])
    phi0 = phi_functional(dec, f, c, 0.0)
    tol = max(1e-8 * abs(phi0), 1e-14)
    trace.flags["Phi0"] = phi0
    trace.flags["monotone"] = trace.nonincreasing("Phi", tol) if trace.times.size > 1 else True
    return trace


def psi_functional(dec: SpectralDecomposition, f, chain: ConstantChain, t: float) -> float:
    """``E[phi] + A Var(phi) - eta Ent*(phi^2)`` with ``phi = P_t f``."""
    m = dec.measure
    phi = heat_apply(dec, f, t)
    mass = m.inner(f, f)
    return (dirichlet_form(dec.generator, phi) + chain.A * variance(m, phi)
            - chain.eta * entropy_star(m, phi, mass))


def trace_psi(dec: SpectralDecomposition, f, chain: ConstantChain, times, terminal_time: float = 60.0) -> FlowTrace:
    """Sample Psi for ``t >= t0`` and flag monotonicity and the terminal sign."""
    f = np.asarray(f, dtype=float)
    times = np.asarray(times, dtype=float)
    if np.any(times < chain.t0 - 1e-12):
        raise ValueError(f"Psi is only controlled for t >= t0 = {chain.t0}")
    trace = FlowTrace(times)
    trace.values["Psi"] = np.array([psi_functional(dec, f, chain, t) for t in trace.times])
    scale = max(abs(trace.values["Psi"][0]), 1e-300)
    terminal = psi_functional(dec, f, chain, max(terminal_time, float(times[-1])))
    trace.flags["monotone"] = trace.nonincreasing("Psi", 1e-10 * scale) if times.size > 1 else True
    trace.flags["terminal"] = terminal
    trace.flags["terminal_ok"] = terminal >= -1e-8
    trace.flags["start_nonnegative"] = bool(trace.values["Psi"][0] >= -1e-8)
    return trace


def theta_values(dec: SpectralDecomposition, f, t: float) -> tuple[float, float]:
    """``Theta1(t)`` and ``Theta2(t)`` for the pair ``P_t f^2``, ``(P_t f)^2``."""
    m = dec.measure
    f = np.asarray(f, dtype=float)
    mass = m.inner(f, f)
    pf2 = heat_apply(dec, f * f, t)
    sq = heat_apply(dec, f, t) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        log_ratio = np.log(sq / mass)
        theta1_terms = np.where(pf2 - sq == 0, 0.0, (pf2 - sq) * log_ratio)
        theta2_terms = xlogy(pf2, pf2) - np.where(pf2 == 0, 0.0, pf2 * np.log(sq))
    return float(m.weights @ theta1_terms), float(m.weights @ theta2_terms)


def theta_bounds(dec: SpectralDecomposition, f, chain: ConstantChain, t0: float | None = None,
                 tolerance: float = 1e-8) -> CheckReport:
    """Check the three comparison bounds of the short-time step at ``t0``.

    Margins, in order: ``C1 E + C2 mu f^2 + C3 Var - Theta1``,
    ``C4 E - Theta2`` and ``C4 E - (Ent(f^2) - Ent(P_t0 f^2))``.
    """
    t0 = chain.t0 if t0 is None else float(t0)
    m = dec.measure
    f = np.asarray(f, dtype=float)
    energy = dirichlet_form(dec.generator, f)
    mass = m.inner(f, f)
    var = variance(m, f)
    th1, th2 = theta_values(dec, f, t0)
    pf2 = np.maximum(heat_apply(dec, f * f, t0), 0.0)
    drop = entropy(m, f * f) - entropy(m, pf2)
    margins = [chain.C1 * energy + chain.C2 * mass + chain.C3 * var - th1,
               chain.C4 * energy - th2,
               chain.C4 * energy - drop]
    names = ("theta1", "theta2", "entropy_drop")
    ent_pt = entropy(m, pf2)
    ent_star = entropy_star(m, heat_apply(dec, f, t0), mass) if mass > 0 else 0.0
    return CheckReport.from_margins("theta_bounds", margins, [{"bound": n} for n in names], tolerance,
                                    theta1=th1, theta2=th2, entropy_drop=drop,
                                    identity_residual=ent_pt - ent_star - (th1 + th2))


def richardson_derivative(fun, t: float, step: float) -> float:
    """Centered difference with steps ``step`` and ``step/2``, Richardson-combined."""
    def centered(h):
        return (fun(t + h) - fun(t - h)) / (2 * h)
    if t - step < 0:
        raise ValueError("finite-difference stencil reaches negative time")
    return (4 * centered(step / 2) - centered(step)) / 3


def _default_step(dec: SpectralDecomposition) -> float:
    return 1e-4 / float(dec.eigenvalues[1])


def energy_derivative_sides(dec: SpectralDecomposition, f, t: float, step: float | None = None) -> tuple[float, float]:
    """Left: d/dt E[P_t f] by finite differences.  Right: ``-2 mu(phi''^2) - 2 mu(V'' phi'^2)``."""
    g = dec.grid
    if g.dim != 1:
        raise ValueError("the energy identity check is one-dimensional")
    step = _default_step(dec) if step is None else step
    gen = dec.generator
    lhs = richardson_derivative(lambda s: dirichlet_form(gen, heat_apply(dec, f, s)), t, step)
    phi = heat_apply(dec, f, t)
    inner = g.interior_mask()
    d1 = grid_gradient(g, phi)[:, 0]
    d2 = second_difference(g, phi)
    vpp = gen.potential.hessian_diagonal(g.nodes)[:, 0]
    mu = dec.measure.weights
    rhs = -2.0 * float(mu[inner] @ (d2[inner] ** 2)) - 2.0 * float(mu[inner] @ (vpp[inner] * d1[inner] ** 2))
    return lhs, rhs


def _relative(lhs: float, rhs: float) -> float:
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300) if (lhs or rhs) else 0.0


def check_energy_derivative(dec: SpectralDecomposition, f, t: float, scale: float = 1.0,
                            step: float | None = None) -> CheckReport:
    """Compare the energy decay rate with its Bochner form; tolerance ``10 h^2 scale``."""
    if not t > 0:
        raise ValueError("t must be positive")
    lhs, rhs = energy_derivative_sides(dec, f, t, step)
    rel = _relative(lhs, rhs)
    tol = 10 * dec.grid.spacing**2 * scale
    return CheckReport("energy_derivative", rel <= tol, tol - rel, {"t": t}, 1, 0.0,
                       details={"lhs": lhs, "rhs": rhs, "relative_error": rel})


def energy_derivative_order(decs, fs, t: float) -> tuple[list[float], float]:
    """Relative errors at two resolutions and the observed order ``log2(e1/e2) / log2(h1/h2)``."""
    errs = []
    for dec, f in zip(decs, fs):
        lhs, rhs = energy_derivative_sides(dec, f, t)
        errs.append(_relative(lhs, rhs))
    h = [d.grid.spacing for d in decs]
    order = math.log(errs[0] / errs[1]) / math.log(h[0] / h[1]) if errs[1] > 0 else float("inf")
    return errs, order


def check_variance_derivative(dec: SpectralDecomposition, f, t: float, tolerance: float = 1e-6,
                              step: float | None = None) -> CheckReport:
    """``d/dt Var(P_t f) = -2 E[P_t f]``; the margin is tolerance minus relative error."""
    step = _default_step(dec) if step is None else step
    m = dec.measure
    lhs = richardson_derivative(lambda s: variance(m, heat_apply(dec, f, s)), t, step)
    rhs = -2.0 * dirichlet_form(dec.generator, heat_apply(dec, f, t))
    rel = _relative(lhs, rhs)
    return CheckReport("variance_derivative", rel <= tolerance, tolerance - rel, {"t": t}, 1, 0.0,
                       details={"lhs": lhs, "rhs": rhs, "relative_error": rel})


def check_entstar_derivative(dec: SpectralDecomposition, f, t: float, scale: float = 1.0,
                             step: float | None = None) -> CheckReport:
    """``-d/dt Ent*(phi^2) = 2 mu(|grad phi|^2 log(phi^2 / mu f^2)) + 6 mu |grad phi|^2``.

    The right side uses central-difference gradients at interior nodes, so
    the tolerance is ``10 h^2 scale`` relative, as for the energy identity.
    """
    f = np.asarray(f, dtype=float)
    step = _default_step(dec) if step is None else step
    m = dec.measure
    mass = m.inner(f, f)
    lhs = -richardson_derivative(lambda s: entropy_star(m, heat_apply(dec, f, s), mass), t, step)
    phi = heat_apply(dec, f, t)
    if np.any(phi <= 0):
        raise ValueError("the Ent* identity needs P_t f > 0")
    g = dec.grid
    inner = g.interior_mask()
    grad2 = np.sum(grid_gradient(g, phi) ** 2, axis=1)
    mu = m.weights
    rhs = (2.0 * float(mu[inner] @ (grad2[inner] * np.log(phi[inner] ** 2 / mass)))
           + 6.0 * float(mu[inner] @ grad2[inner]))
    rel = _relative(lhs, rhs)
    tol = 10 * g.spacing**2 * scale
    return CheckReport("entstar_derivative", rel <= tol, tol - rel, {"t": t}, 1, 0.0,
                       details={"lhs": lhs, "rhs": rhs, "relative_error": rel})


def check_rothaus(m, f, a: float, tolerance: float = 1e-10) -> CheckReport:
    """Both forms of the Rothaus bound.

    ``Ent(f^2) + 2 mu f^2 - Ent((f + a)^2)`` and
    ``Ent((f - mu f)^2) + 2 Var(f) - Ent(f^2)``, each expected nonnegative.
    """
    f = np.asarray(f, dtype=float)
    shifted = f + a
    centred = f - m.mean(f)
    m1 = entropy(m, f * f) + 2 * m.inner(f, f) - entropy(m, shifted * shifted)
    m2 = entropy(m, centred * centred) + 2 * variance(m, f) - entropy(m, f * f)
    return CheckReport.from_margins("rothaus", [m1, m2], [{"form": "shift", "a": a}, {"form": "centred"}],
                                    tolerance)


def flow_table(dec: SpectralDecomposition, f, times, c: float | None = None,
               chain: ConstantChain | None = None) -> list[dict]:
    """Rows with the trace columns; entries that are undefined are None.

    Phi needs ``c`` and positive ``P_t f``; Psi needs a chain and ``t >= t0``.
    """
    m = dec.measure
    f = np.asarray(f, dtype=float)
    mass = m.inner(f, f)
    rows = []
    for t in np.asarray(times, dtype=float):
        phi = heat_apply(dec, f, t)
        pf2 = np.maximum(heat_apply(dec, f * f, t), 0.0)
        th1, th2 = theta_values(dec, f, t)
        row = {
            "t": float(t),
            "Phi": phi_functional(dec, f, c, t) if c is not None and np.all(f > 0) else None,
            "Psi": psi_functional(dec, f, chain, t) if chain is not None and t >= chain.t0 else None,
            "Ent_f2": entropy(m, pf2),
            "Ent_star": entropy_star(m, phi, mass),
            "Energy": dirichlet_form(dec.generator, phi),
            "Theta1": th1,
            "Theta2": th2,
        }
        rows.append(row)
    return rows
