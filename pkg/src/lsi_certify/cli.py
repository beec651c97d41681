"""``lsi-certify <command> <config-path> [--out DIR] [--seed N]``.

Exit status: 0 all checks passed, 1 a mathematical check failed, 2 bad
configuration, 3 numerical failure (eigensolve, indefinite operator, solver
residual).
"""

from __future__ import annotations

import argparse
import csv
import logging
import json
import math
import re
import sys
from pathlib import Path

import numpy as np

from . import converse as conv
from .certify import build_pipeline, certify, constant_chain, oracle_lsi_lower_bound
from .config import ConfigError, RunConfig, load_config
from .flow import (TRACE_COLUMNS, check_energy_derivative, check_entstar_derivative, check_rothaus,
                   check_variance_derivative, flow_table, theta_bounds, trace_phi, trace_psi)
from .lyapunov import LyapunovError
from .potentials import PotentialError, curvature_lower_bound, make_potential
from .reports import merge_reports
from .samples import bump_profile, random_smooth
from .semigroup_checks import check_gradient_commutation, check_harnack, check_pt_upper, random_pairs
from .spectral import SpectralError, spectral_gap

log = logging.getLogger("lsi_certify")

COMMANDS = ("certify", "flow", "converse", "harnack", "spectrum", "oracle", "corpus")
NUMERICAL_ERRORS = (SpectralError, conv.IndefiniteOperatorError, conv.ResidualError, OverflowError,
                    FloatingPointError, np.linalg.LinAlgError)

CORPUS = (
    ("gaussian", {}, 8.0),
    ("double_well", {"a4": 0.25, "a2": -0.5}, None),
    ("quartic", {"a4": 0.25}, None),
    ("polynomial", {"a4": 0.25, "a3": 0.2, "a2": -0.5}, None),
)


class CheckFailed(Exception):
    pass


def snake_key(key) -> str:
    """``"C_lsi"`` -> ``"c_lsi"``, ``"Ent_f2"`` -> ``"ent_f2"``; report keys are lowercase snake_case."""
    return re.sub(r"[^0-9a-zA-Z]+", "_", str(key)).strip("_").lower()


def dumps(obj, indent: int = 0) -> str:
    """JSON with floats at 17 significant digits; non-finite floats become null."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        keys = [snake_key(k) for k in obj]
        if len(set(keys)) != len(keys):
            raise ValueError(f"report keys collide after snake-casing: {list(obj)}")
        items = [f'{pad}"{k}": {dumps(v, indent + 1)}' for k, v in zip(keys, obj.values())]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(pad + dumps(v, indent + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return format(x, ".17g") if math.isfinite(x) else "null"
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist(), indent)
    return json.dumps(str(obj))


def _pipeline(cfg: RunConfig, p=None, radius="config"):
    p = cfg.potential() if p is None else p
    r = cfg.radius if radius == "config" else radius
    return build_pipeline(p, r, cfg.points, backend=cfg.backend, dense_budget=cfg.dense_budget)


def _certify(cfg: RunConfig, pipe, oracle: bool = True, force_chain: bool = False):
    return certify(pipe.potential, t0=cfg.t0, K_override=cfg.K_override, force_chain=force_chain,
                   a_grid=cfg.a_grid, c_ladder=cfg.c_ladder,
                   oracle_starts=cfg.oracle_starts if oracle else 0, oracle_iters=cfg.oracle_iters,
                   scan_t0=cfg.scan_t0, lyapunov_tolerance=cfg.lyapunov_tolerance, pipeline=pipe)


def cmd_certify(cfg: RunConfig, pipe=None) -> dict:
    pipe = pipe or _pipeline(cfg)
    rep = _certify(cfg, pipe)
    out = rep.to_dict()
    out["passed"] = bool(rep.sound) and (rep.pt_upper is None or rep.pt_upper.passed)
    return out


def cmd_spectrum(cfg: RunConfig, pipe=None) -> tuple[dict, list]:
    pipe = pipe or _pipeline(cfg)
    vals = pipe.spectrum.eigenvalues
    rows = [(k, float(v)) for k, v in enumerate(vals)]
    out = {"spectral_gap": spectral_gap(pipe.spectrum), "backend": pipe.spectrum.backend,
           "count": len(vals), "lowest": [float(v) for v in vals[:10]], "passed": True}
    return out, rows


def cmd_oracle(cfg: RunConfig, pipe=None) -> dict:
    pipe = pipe or _pipeline(cfg)
    best, values = oracle_lsi_lower_bound(pipe.generator, cfg.oracle_starts, cfg.oracle_iters,
                                          dec=pipe.spectrum, return_details=True)
    return {"oracle_lower_bound": best, "start_values": values, "passed": True}


def cmd_harnack(cfg: RunConfig, pipe=None, rng=None) -> dict:
    pipe = pipe or _pipeline(cfg)
    rng = rng or np.random.default_rng(cfg.seed)
    dec = pipe.spectrum
    curv = curvature_lower_bound(pipe.potential, pipe.grid.radius)
    K = cfg.K_override if cfg.K_override is not None else curv.K
    f = bump_profile(pipe.grid)
    pairs = random_pairs(pipe.grid.size, cfg.samples, rng)
    har = check_harnack(dec, f, K, cfg.check_times, pairs, cfg.check_tolerance)
    grad = check_gradient_commutation(dec, random_smooth(pipe.grid, rng), K, cfg.check_times)
    K_pos = cfg.K_override if cfg.K_override is not None else curv.K_chain
    pt = merge_reports(check_pt_upper(dec, f, K_pos, t, tolerance=cfg.check_tolerance)[0] for t in cfg.check_times)
    _, mu0 = check_pt_upper(dec, f, K_pos, cfg.check_times[0])
    reports = [har, grad, pt]
    return {"K": K, "K_positive": K_pos, "mu0": mu0, "checks": [r.to_dict() for r in reports],
            "passed": all(r.passed for r in reports)}


def cmd_flow(cfg: RunConfig, pipe=None, rng=None) -> tuple[dict, list]:
    pipe = pipe or _pipeline(cfg)
    rng = rng or np.random.default_rng(cfg.seed)
    dec, g = pipe.spectrum, pipe.grid
    curv = curvature_lower_bound(pipe.potential, g.radius)
    f = bump_profile(g)
    out: dict = {"checks": []}
    checks = []
    c = curv.kappa if curv.log_concave else None
    if c is not None:
        tr = trace_phi(dec, f, c, cfg.flow_times)
        out["phi_monotone"] = tr.flags["monotone"]
        if not tr.flags["monotone"]:
            out.setdefault("failures", []).append("Phi not monotone")
    chain = None
    try:
        chain = _certify(cfg, pipe, oracle=False, force_chain=True).chain
    except LyapunovError as exc:
        out["chain_error"] = str(exc)
    if chain is not None:
        out["constant_chain"] = chain.to_dict()
        later = [t for t in cfg.flow_times if t >= chain.t0] or [chain.t0, chain.t0 + 1.0]
        later = sorted(set(later))
        if len(later) < 2:
            later = [later[0], later[0] + 1.0]
        tr = trace_psi(dec, f, chain, later)
        out["psi"] = {k: tr.flags[k] for k in ("monotone", "terminal", "terminal_ok", "start_nonnegative")}
        if not (tr.flags["monotone"] and tr.flags["terminal_ok"] and tr.flags["start_nonnegative"]):
            out.setdefault("failures", []).append("Psi monotonicity")
        checks.append(theta_bounds(dec, f, chain))
    t = 0.5
    if g.dim == 1:
        checks.append(check_energy_derivative(dec, dec.mode(2), t, scale=10.0))
        checks.append(check_entstar_derivative(dec, f, t, scale=10.0, step=cfg.fd_step))
    checks.append(check_variance_derivative(dec, f, t, step=cfg.fd_step))
    rothaus = [check_rothaus(pipe.measure, random_smooth(g, rng, positive=False), float(rng.uniform(-5, 5)))
               for _ in range(cfg.samples)]
    checks.append(merge_reports(rothaus))
    out["checks"] = [r.to_dict() for r in checks]
    rows = flow_table(dec, f, cfg.flow_times, c=c, chain=chain)
    out["passed"] = all(r.passed for r in checks) and "failures" not in out
    return out, rows


def cmd_converse(cfg: RunConfig, pipe=None) -> dict:
    pipe = pipe or _pipeline(cfg)
    gen = pipe.generator
    out: dict = {}
    rho = cfg.rho
    rep = None
    if rho is None:
        rep = _certify(cfg, pipe, oracle=False)
        rho = 1.0 / (2.0 * rep.C_lsi)
        out["rho_source"] = f"1/(2 C_lsi) with C_lsi = {rep.C_lsi!r}"
    out["rho"] = rho
    ladder = cfg.converse_c_ladder or None
    try:
        result, rows = conv.scan_herbst_exponent(gen, rho, ladder, cfg.residual_tol)
    except conv.IndefiniteOperatorError as exc:
        out["error"] = str(exc)
        out["operator"] = "schrodinger operator -L + phi"
        out["smallest_eigenvalue"] = exc.smallest_eigenvalue
        out["ladder"] = getattr(exc, "rows", [])
        raise _Numerical(out) from exc
    out["ladder"] = rows
    out["result"] = result.to_dict()
    coer = conv.coercivity_check(gen, result.problem, result.u)
    out["coercivity"] = coer.to_dict()
    curv = curvature_lower_bound(pipe.potential, pipe.grid.radius)
    K = cfg.K_override if cfg.K_override is not None else curv.K_chain
    _, mu0 = check_pt_upper(pipe.spectrum, bump_profile(pipe.grid), K, cfg.t0)
    chain = constant_chain(result.certificate, K, spectral_gap(pipe.spectrum), mu0, cfg.t0)
    out["round_trip_chain"] = chain.to_dict()
    out["passed"] = bool(coer.passed and result.certificate.passed and math.isfinite(chain.C_lsi))
    return out


class _Numerical(Exception):
    def __init__(self, payload: dict):
        super().__init__(payload.get("error", "numerical failure"))
        self.payload = payload


def cmd_corpus(cfg: RunConfig, rng=None) -> dict:
    rng = rng or np.random.default_rng(cfg.seed)
    entries = []
    for family, params, radius in CORPUS:
        p = make_potential(family, params, 0.0, 1)
        pipe = build_pipeline(p, radius, cfg.points, backend=cfg.backend, dense_budget=cfg.dense_budget)
        entry = {"family": family, "params": params}
        entry["certify"] = cmd_certify(cfg, pipe)
        flow, _ = cmd_flow(cfg, pipe, rng)
        entry["flow"] = flow
        sub = RunConfig(**{**cfg.__dict__, "rho": None})
        entry["converse"] = cmd_converse(sub, pipe)
        entry["passed"] = all(entry[k]["passed"] for k in ("certify", "flow", "converse"))
        entries.append(entry)
    return {"potentials": entries, "passed": all(e["passed"] for e in entries)}


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(["" if v is None else (format(v, ".17g") if isinstance(v, float) else v) for v in row])


def run(command: str, cfg: RunConfig) -> int:
    """Run one command, write its files into ``cfg.output_dir`` and return the exit status."""
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report: dict = {"command": command, "family": cfg.family, "seed": cfg.seed}
    status = 0
    try:
        if command == "certify":
            report.update(cmd_certify(cfg))
        elif command == "spectrum":
            body, rows = cmd_spectrum(cfg)
            report.update(body)
            _write_csv(out_dir / "spectrum.csv", ("index", "eigenvalue"), rows)
        elif command == "oracle":
            report.update(cmd_oracle(cfg))
        elif command == "harnack":
            report.update(cmd_harnack(cfg))
        elif command == "flow":
            body, rows = cmd_flow(cfg)
            report.update(body)
            _write_csv(out_dir / "traces.csv", TRACE_COLUMNS, [[r[c] for c in TRACE_COLUMNS] for r in rows])
        elif command == "converse":
            report.update(cmd_converse(cfg))
        elif command == "corpus":
            report.update(cmd_corpus(cfg))
        else:
            raise ConfigError(f"unknown command {command!r}")
        if not report.get("passed", False):
            status = 1
    except _Numerical as exc:
        report.update(exc.payload)
        report["passed"] = False
        status = 3
    except NUMERICAL_ERRORS as exc:
        report.update({"error": f"{type(exc).__name__}: {exc}", "passed": False})
        status = 3
    except LyapunovError as exc:
        report.update({"error": f"{type(exc).__name__}: {exc}", "passed": False})
        status = 1
    report["exit_status"] = status
    (out_dir / "report.json").write_text(dumps(report) + "\n")
    return status


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="lsi-certify", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("config", help="flat key = value config file")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("-v", "--verbose", action="store_true")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"lsi-certify: configuration error: {exc}", file=sys.stderr)
        return 2
    cfg.output_dir = Path(args.out)
    cfg.seed = args.seed
    try:
        return run(args.command, cfg)
    except (ConfigError, PotentialError) as exc:
        print(f"lsi-certify: configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
