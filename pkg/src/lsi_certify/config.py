"""Flat ``key = value`` run configuration with dotted keys.

Lines starting with ``#`` are comments.  Lists are comma separated.
``potential.params.<name>`` entries form the coefficient map.  Unknown keys
and out-of-range values raise :class:`ConfigError` at parse time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path


class ConfigError(ValueError):
    pass


def _float(v: str) -> float:
    return float(v)


def _int(v: str) -> int:
    return int(v)


def _floats(v: str) -> tuple[float, ...]:
    return tuple(float(s) for s in v.split(",") if s.strip())


def _optional_float(v: str) -> float | None:
    return None if v.strip().lower() in ("", "none", "auto") else float(v)


def _bool(v: str) -> bool:
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _positive(x):
    return x is None or x > 0


def _all_positive(xs):
    return len(xs) > 0 and all(x > 0 for x in xs)


# dotted key -> (attribute, parser, validator, message)
SCHEMA = {
    "potential.family": ("family", str.strip, lambda s: s in ("gaussian", "double_well", "quartic", "polynomial"),
                         "one of gaussian, double_well, quartic, polynomial"),
    "potential.x0": ("x0", _floats, lambda xs: len(xs) in (1, 2), "one or two coordinates"),
    "grid.dim": ("dim", _int, lambda d: d in (1, 2), "1 or 2"),
    "grid.radius": ("radius", _optional_float, _positive, "positive or 'auto'"),
    "grid.points": ("points", _int, lambda n: n >= 3, "at least 3"),
    "spectral.backend": ("backend", str.strip, lambda s: s in ("dense", "iterative"), "dense or iterative"),
    "spectral.dense_budget": ("dense_budget", _int, lambda n: n >= 3, "at least 3"),
    "checks.tolerance": ("check_tolerance", _float, lambda x: x >= 0, "nonnegative"),
    "checks.samples": ("samples", _int, lambda n: n >= 1, "at least 1"),
    "checks.times": ("check_times", _floats, _all_positive, "positive times"),
    "lyapunov.a_grid": ("a_grid", _floats, _all_positive, "positive exponents"),
    "lyapunov.c_ladder": ("c_ladder", _floats, _all_positive, "positive values"),
    "lyapunov.tolerance": ("lyapunov_tolerance", _float, lambda x: x >= 0, "nonnegative"),
    "chain.t0": ("t0", _float, lambda x: x > 0, "positive"),
    "chain.K_override": ("K_override", _optional_float, _positive, "positive or none"),
    "chain.scan_t0": ("scan_t0", _bool, lambda b: True, "boolean"),
    "oracle.starts": ("oracle_starts", _int, lambda n: n >= 1, "at least 1"),
    "oracle.iters": ("oracle_iters", _int, lambda n: n >= 1, "at least 1"),
    "flow.times": ("flow_times", _floats, lambda xs: len(xs) > 0 and all(x >= 0 for x in xs), "nonnegative times"),
    "flow.fd_step": ("fd_step", _optional_float, _positive, "positive or auto"),
    "converse.rho": ("rho", _optional_float, _positive, "positive or auto"),
    "converse.c_ladder": ("converse_c_ladder", _floats, _all_positive, "positive values"),
    "converse.residual_tol": ("residual_tol", _float, lambda x: x > 0, "positive"),
}


@dataclass
class RunConfig:
    family: str = "gaussian"
    params: dict = field(default_factory=dict)
    x0: tuple = (0.0,)
    dim: int = 1
    radius: float | None = None
    points: int = 1001
    backend: str = "dense"
    dense_budget: int = 4096
    check_tolerance: float = 1e-8
    samples: int = 100
    check_times: tuple = (0.1, 0.5, 1.0, 2.0)
    a_grid: tuple = (1 / 16, 1 / 8, 1 / 4, 3 / 8)
    c_ladder: tuple = (1 / 64, 1 / 32, 1 / 16, 1 / 8, 3 / 16, 1 / 4, 3 / 8, 1 / 2, 3 / 4, 1.0)
    lyapunov_tolerance: float = 1e-8
    t0: float = 1.0
    K_override: float | None = None
    scan_t0: bool = False
    oracle_starts: int = 4
    oracle_iters: int = 200
    flow_times: tuple = tuple(0.25 * k for k in range(21))
    fd_step: float | None = None
    rho: float | None = None
    converse_c_ladder: tuple = ()
    residual_tol: float = 1e-10
    output_dir: Path = Path(".")
    seed: int = 0

    def potential(self):
        from .potentials import make_potential

        x0 = self.x0 if len(self.x0) == self.dim else self.x0 * self.dim
        return make_potential(self.family, self.params, x0, self.dim)


def parse_config(text: str) -> RunConfig:
    cfg = RunConfig()
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key}")
        seen.add(key)
        if key.startswith("potential.params."):
            name = key[len("potential.params."):]
            try:
                cfg.params[name] = float(value)
            except ValueError:
                raise ConfigError(f"line {lineno}: {key} must be a number") from None
            continue
        if key not in SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key}")
        attr, parse, valid, expect = SCHEMA[key]
        try:
            parsed = parse(value)
        except ValueError:
            raise ConfigError(f"line {lineno}: cannot parse {key} = {value!r}") from None
        if not valid(parsed):
            raise ConfigError(f"line {lineno}: {key} must be {expect}, got {value!r}")
        setattr(cfg, attr, parsed)
    if len(cfg.x0) not in (1, cfg.dim):
        raise ConfigError(f"potential.x0 has {len(cfg.x0)} coordinates for grid.dim = {cfg.dim}")
    try:
        cfg.potential()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
