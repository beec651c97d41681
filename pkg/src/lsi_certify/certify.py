"""LSI constants: the Lyapunov-to-LSI constant chain, the log-concave branch,
and a gradient-ascent lower bound on the optimal constant.

With ``delta = 1 - exp(-2 K t0)`` the chain is

    eta = c delta / (2K)
    A   = K + b - c log(mu0) / (2K) + 3 eta
    C1  = 2K exp(2K t0) / (c delta)      C2 = 2 b K / (c delta)
    C3  = -log(mu0) / delta              C4 = 2 (exp(2K t0) - 1) / K
    C   = 1 + eta (C1 + 2 C4) + [A + eta (2 + C2 + C3)] / lambda

and ``eta Ent(f^2) <= C E(f, f)``, i.e. the LSI constant is ``C / eta``.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .discretization import Generator, WeightedMeasure, build_generator, build_grid, build_measure, dirichlet_form, entropy
from .lyapunov import DEFAULT_A_GRID, DEFAULT_C_LADDER, LyapunovCertificate, fit_lyapunov_exponential
from .potentials import K_FLOOR, PotentialSpec, curvature_lower_bound, default_radius
from .semigroup_checks import check_pt_upper
from .spectral import SpectralDecomposition, decompose, spectral_gap

log = logging.getLogger(__name__)


@dataclass
class ConstantChain:
    K: float
    t0: float
    c: float
    b: float
    eta: float
    mu0: float
    A: float
    C1: float
    C2: float
    C3: float
    C4: float
    lambda_mu: float
    C_step: float
    C_lsi: float

    def to_dict(self) -> dict:
        return asdict(self)

    def pre_last_rhs(self, energy: float, mass: float, var: float) -> float:
        """Right side of ``eta Ent(f^2) <= [1 + eta(C1 + 2C4)] E + eta C2 mu f^2 + (A + eta C3) Var``."""
        return ((1 + self.eta * (self.C1 + 2 * self.C4)) * energy + self.eta * self.C2 * mass
                + (self.A + self.eta * self.C3) * var)


def constant_chain(cert: LyapunovCertificate | tuple, K: float, lambda_mu: float, mu0: float,
                   t0: float = 1.0) -> ConstantChain:
    """Evaluate the explicit constants for a Lyapunov pair ``(c, b)``.

    ``cert`` may be a certificate or a plain ``(c, b)`` tuple.
    """
    c, b = (cert.c, cert.b) if isinstance(cert, LyapunovCertificate) else map(float, cert)
    if not K > 0:
        raise ValueError("constant chain needs K > 0; use certify_logconcave for the log-concave branch")
    if not t0 > 0:
        raise ValueError("t0 must be positive")
    if not lambda_mu > 0:
        raise ValueError("spectral gap must be positive")
    if not 0 < mu0 <= 1:
        raise ValueError(f"mu0 must lie in (0, 1], got {mu0}")
    if not c > 0 or b < 0:
        raise ValueError("need c > 0 and b >= 0")
    delta = -math.expm1(-2 * K * t0)
    log_mu0 = math.log(mu0)
    eta = c * delta / (2 * K)
    A = K + b - c * log_mu0 / (2 * K) + 3 * eta
    C1 = 2 * K * math.exp(2 * K * t0) / (c * delta)
    C2 = 2 * b * K / (c * delta)
    C3 = -log_mu0 / delta
    C4 = 2 * math.expm1(2 * K * t0) / K
    C = 1 + eta * (C1 + 2 * C4) + (A + eta * (2 + C2 + C3)) / lambda_mu
    return ConstantChain(K, t0, c, b, eta, mu0, A, C1, C2, C3, C4, lambda_mu, C, C / eta)


def certify_logconcave(c: float) -> float:
    """LSI constant ``2 / c`` for ``Hess V >= c > 0``."""
    if not c > 0:
        raise ValueError(f"log-concave branch needs c > 0, got {c}")
    return 2.0 / c


def lsi_ratio(gen: Generator, f) -> float:
    """``Ent(f^2) / E(f, f)``; nan for constant f."""
    f = np.asarray(f, dtype=float)
    energy = dirichlet_form(gen, f)
    if energy <= 0:
        return float("nan")
    return entropy(gen.measure, f * f) / energy


def _ratio_and_gradient(gen: Generator, f: np.ndarray) -> tuple[float, np.ndarray]:
    # L^2(mu) gradients: d Ent(f^2) = 2 f log(f^2 / mu f^2), d E = -2 L f
    mu = gen.measure.weights
    f2 = f * f
    mass = float(mu @ f2)
    energy = dirichlet_form(gen, f)
    ent = entropy(gen.measure, f2)
    with np.errstate(divide="ignore", invalid="ignore"):
        logterm = np.where(f2 > 0, np.log(f2 / mass), 0.0)
    g_ent = 2 * f * logterm
    g_en = -2 * gen.apply(f)
    ratio = ent / energy
    return ratio, (g_ent - ratio * g_en) / energy


def _ascend(gen: Generator, solver, f: np.ndarray, iters: int) -> float:
    mu = gen.measure.weights
    f = f / math.sqrt(float(mu @ (f * f)))
    if dirichlet_form(gen, f) <= 1e-14:
        return float("nan")
    ratio, grad = _ratio_and_gradient(gen, f)
    step = 1.0
    for _ in range(iters):
        # Sobolev gradient: precondition with (I - L)^-1 to tame the stiff high modes
        direction = solver(grad)
        slope = float(mu @ (grad * direction))
        if slope <= 1e-14 * max(ratio, 1.0):
            break
        improved = False
        while step > 1e-12:
            trial = f + step * direction
            trial /= math.sqrt(float(mu @ (trial * trial)))
            if dirichlet_form(gen, trial) > 1e-14:
                r_new, g_new = _ratio_and_gradient(gen, trial)
                if r_new > ratio:
                    f, ratio, grad = trial, r_new, g_new
                    improved = True
                    step *= 2.0
                    break
            step *= 0.5
        if not improved:
            break
    return ratio


def _worker_count() -> int:
    try:
        return max(1, int(os.environ.get("LSI_CERTIFY_THREADS", "1")))
    except ValueError:
        return 1


def oracle_starts(dec: SpectralDecomposition, starts: int, tilts=(0.25, 0.5, 1.0, 2.0)) -> list[np.ndarray]:
    """Initial functions: low eigenmodes, constant-plus-mode, and tilts ``exp(lambda x / 2)``."""
    g = dec.grid
    out = []
    for k in range(1, min(starts, len(dec.eigenvalues) - 1) + 1):
        mode = dec.mode(k)
        out.append(mode)
        for eps in (0.1, 1e-3):
            out.append(1.0 + eps * mode / np.max(np.abs(mode)))
    for lam in tilts:
        for axis in range(g.dim):
            z = lam * g.nodes[:, axis] / 2
            out.append(np.exp(z - z.max()))
    return out


def oracle_lsi_lower_bound(gen: Generator, starts: int = 4, iters: int = 200,
                           dec: SpectralDecomposition | None = None, return_details: bool = False):
    """Lower bound on the optimal LSI constant by multi-start ascent of ``Ent(f^2)/E(f,f)``.

    Each ascent keeps ``mu(f^2) = 1``, takes preconditioned gradient steps and
    halves the step until the ratio increases.  The best ratio seen is a valid
    lower bound; there is no claim of global optimality.
    """
    if starts < 1:
        raise ValueError("need at least one start")
    if dec is None:
        dec = decompose(gen)
    n = gen.size
    lu = spla.splu((sp.identity(n, format="csc") - gen.matrix).tocsc())
    inits = oracle_starts(dec, starts)
    with ThreadPoolExecutor(_worker_count()) as pool:
        values = list(pool.map(lambda f: _ascend(gen, lu.solve, np.array(f, dtype=float), iters), inits))
    finite = [v for v in values if np.isfinite(v)]
    if not finite:
        raise ValueError("all oracle starts were degenerate")
    best = max(finite)
    if return_details:
        return best, values
    return best


@dataclass
class CertificationReport:
    family: str
    branch: str
    radius: float
    points: int
    kappa: float
    K: float
    K_clamped: bool
    tail_indicator: float
    lambda_mu: float
    C_lsi: float
    oracle: float | None
    sound: bool | None
    chain: ConstantChain | None = None
    certificate: LyapunovCertificate | None = None
    pt_upper: object = None
    t0_scan: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {
            "family": self.family,
            "branch": self.branch,
            "rule": "C = 2/c" if self.branch == "log-concave" else "C = C_step/eta",
            "radius": self.radius,
            "points": self.points,
            "kappa": self.kappa,
            "K": self.K,
            "K_clamped": self.K_clamped,
            "tail_indicator": self.tail_indicator,
            "lambda_mu": self.lambda_mu,
            "C_lsi": self.C_lsi,
            "oracle_lower_bound": self.oracle,
            "sound": self.sound,
            "notes": list(self.notes),
        }
        if self.chain is not None:
            out["constant_chain"] = self.chain.to_dict()
        if self.certificate is not None:
            out["lyapunov_certificate"] = self.certificate.to_dict()
        if self.pt_upper is not None:
            out["pt_upper_check"] = self.pt_upper.to_dict()
        if self.t0_scan:
            out["t0_scan"] = [{"t0": t, "C_lsi": v} for t, v in self.t0_scan]
        return out


@dataclass
class Pipeline:
    """Grid, generator and spectrum for one potential."""

    potential: PotentialSpec
    generator: Generator
    spectrum: SpectralDecomposition

    @property
    def grid(self):
        return self.generator.grid

    @property
    def measure(self) -> WeightedMeasure:
        return self.generator.measure


def build_pipeline(p: PotentialSpec, radius: float | None = None, points: int = 1001,
                   backend: str = "dense", dense_budget: int = 4096) -> Pipeline:
    if radius is None:
        radius = default_radius(p)
    g = build_grid(p.dim, radius, points)
    gen = build_generator(p, g, build_measure(p, g))
    return Pipeline(p, gen, decompose(gen, backend=backend, dense_budget=dense_budget))


def certify(p: PotentialSpec, radius: float | None = None, points: int = 1001, *, t0: float = 1.0,
            K_override: float | None = None, force_chain: bool = False, a_grid=DEFAULT_A_GRID,
            c_ladder=DEFAULT_C_LADDER, oracle_starts: int = 4, oracle_iters: int = 200,
            scan_t0: bool = False, lyapunov_tolerance: float = 1e-8,
            pipeline: Pipeline | None = None) -> CertificationReport:
    """Certify an LSI constant for ``p`` on a truncated grid.

    Uses ``2/kappa`` when ``kappa = inf Hess V > 0``; otherwise fits an
    exponential Lyapunov function and evaluates the constant chain with
    ``K = max(-kappa, 1e-6)`` (or ``K_override``).  The oracle lower bound is
    attached with a soundness verdict ``C_lsi >= oracle - 1e-6``.
    """
    if pipeline is None:
        pipeline = build_pipeline(p, radius, points)
    gen, dec = pipeline.generator, pipeline.spectrum
    g = gen.grid
    curv = curvature_lower_bound(p, g.radius)
    lam = spectral_gap(dec)
    notes = []
    if curv.argmin in (-g.radius, g.radius) and p.poly.deriv(3)(curv.argmin) != 0:
        notes.append("curvature infimum attained at the truncation radius; R may be too small")
    if gen.measure.tail_indicator > 1e-12:
        notes.append(f"tail indicator {gen.measure.tail_indicator:.2e} exceeds 1e-12")
    chain = cert = pt = None
    scan = []
    K_used = curv.K
    clamped = False
    if curv.log_concave and not force_chain and K_override is None:
        branch = "log-concave"
        C = certify_logconcave(curv.kappa)
    else:
        branch = "lyapunov"
        K_used = K_override if K_override is not None else curv.K_chain
        clamped = K_override is None and curv.K < K_FLOOR
        if clamped:
            notes.append(f"K clamped from {curv.K:g} to {K_FLOOR:g}")
        cert = fit_lyapunov_exponential(gen, a_grid, c_ladder, tolerance=lyapunov_tolerance)
        x = g.nodes[:, 0]
        probe = 1.0 + 0.5 * np.sin(x)
        pt, mu0 = check_pt_upper(dec, probe, K_used, t0)
        chain = constant_chain(cert, K_used, lam, mu0, t0)
        if scan_t0:
            for t in np.linspace(0.1, 2.0, 20):
                scan.append((float(t), constant_chain(cert, K_used, lam, mu0, float(t)).C_lsi))
        C = chain.C_lsi
    oracle = oracle_lsi_lower_bound(gen, oracle_starts, oracle_iters, dec=dec) if oracle_starts else None
    sound = None if oracle is None else bool(C >= oracle - 1e-6)
    return CertificationReport(p.family, branch, g.radius, g.points, curv.kappa, K_used, clamped,
                               gen.measure.tail_indicator, lam, C, oracle, sound, chain, cert, pt, scan, notes)
