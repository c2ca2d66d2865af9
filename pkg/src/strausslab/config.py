"""Line-oriented experiment configuration.

Format: one ``key = value`` per line, dotted keys, ``#`` starts a comment.

    model.n = 1
    model.mu1 = 2
    sweep.eps = 0.8, 0.6, 0.45
    checks = exponents, specfun

Unknown keys are errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DomainError
from .exponents import ModelParams, strauss
from .profiles import KINDS, Profile
from .solver import RadialGrid, SolverConfig

CASES = ("subcritical", "critical", "ode-critical")
CHECKS = ("exponents", "specfun", "testfuncs", "ledger", "critical-ode", "functionals")
DEFAULT_CHECKS = ("exponents", "specfun", "testfuncs", "ledger", "critical-ode")


def _float(v):
    return float(v)


def _int(v):
    x = float(v)
    if x != int(x):
        raise ValueError(f"{v!r} is not an integer")
    return int(x)


def _floats(v):
    return tuple(float(s) for s in v.split(",") if s.strip())


def _names(v):
    return tuple(s.strip() for s in v.split(",") if s.strip())


def _bool(v):
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{v!r} is not a boolean")


_KEYS = {
    "model.n": _int, "model.mu1": _float, "model.mu2sq": _float, "model.p": _float,
    "model.eps": _float, "model.R": _float, "model.profile": str,
    "model.A_f": _float, "model.A_g": _float,
    "grid.dr": _float, "grid.r_max": _float,
    "solver.T_max": _float, "solver.cfl": _float, "solver.dt0": _float,
    "solver.threshold": _float, "solver.rtol": _float, "solver.max_refinements": _int,
    "solver.nonlinear": _bool,
    "sweep.eps": _floats, "sweep.eps_min": _float, "sweep.eps_max": _float, "sweep.count": _int,
    "ode.C": _float, "ode.c0": _float,
    "ledger.C1": _float, "ledger.j_max": _int, "ledger.T0": _float,
    "case": str, "checks": _names, "output_dir": str, "seed": _int,
}


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelParams = field(default_factory=ModelParams)
    dr: float = 0.02
    r_max: float | None = None
    solver: SolverConfig = field(default_factory=lambda: SolverConfig(T_max=50.0))
    threshold: float = 1e6
    rtol: float = 0.01
    max_refinements: int = 4
    sweep: tuple = ()
    case: str = "subcritical"
    checks: tuple = DEFAULT_CHECKS
    output_dir: str | None = None
    seed: int = 0
    ode_C: float = 1.0
    ode_c0: float = 1.0
    ledger_C1: float = 1.0
    ledger_j_max: int = 30
    ledger_T0: float = 1.0

    def grid(self) -> RadialGrid:
        if self.r_max is None:
            return RadialGrid.covering(self.model.R, self.solver.T_max, self.dr)
        return RadialGrid(self.r_max, int(round(self.r_max / self.dr)))

    def with_strauss_p(self) -> "ExperimentConfig":
        return replace(self, model=self.model.replace(p=strauss(self.model.n + self.model.mu1)))


def parse_config(text: str) -> ExperimentConfig:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            raw[key] = _KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None
    return build_config(raw)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None


def _sweep(raw) -> tuple:
    if "sweep.eps" in raw:
        if any(k in raw for k in ("sweep.eps_min", "sweep.eps_max", "sweep.count")):
            raise ConfigError("give either 'sweep.eps' or 'sweep.eps_min/eps_max/count', not both")
        eps = raw["sweep.eps"]
    elif any(k in raw for k in ("sweep.eps_min", "sweep.eps_max", "sweep.count")):
        try:
            lo, hi, k = raw["sweep.eps_min"], raw["sweep.eps_max"], raw["sweep.count"]
        except KeyError as exc:
            raise ConfigError(f"log-spaced sweep needs key {exc.args[0]!r}") from None
        if not (lo > 0 and hi > 0 and k >= 1):
            raise ConfigError("sweep.eps_min, sweep.eps_max must be positive and sweep.count >= 1")
        eps = tuple(float(x) for x in np.geomspace(hi, lo, k))
    else:
        return ()
    if any(not e > 0 for e in eps):
        raise ConfigError("sweep.eps values must be strictly positive")
    if len(set(eps)) != len(eps):
        raise ConfigError("sweep.eps values must be distinct")
    return tuple(eps)


def build_config(raw: dict) -> ExperimentConfig:
    base = ExperimentConfig()
    m = base.model
    kind = raw.get("model.profile", m.profile.kind)
    if kind not in KINDS:
        raise ConfigError(f"model.profile must be one of {KINDS}, got {kind!r}")
    try:
        profile = Profile(kind, raw.get("model.A_f", 1.0), raw.get("model.A_g", 1.0))
        model = ModelParams(
            n=raw.get("model.n", m.n), mu1=raw.get("model.mu1", m.mu1),
            mu2sq=raw.get("model.mu2sq", m.mu2sq), p=raw.get("model.p", m.p),
            eps=raw.get("model.eps", m.eps), R=raw.get("model.R", m.R), profile=profile,
        )
        solver = SolverConfig(
            T_max=raw.get("solver.T_max", base.solver.T_max),
            cfl=raw.get("solver.cfl", base.solver.cfl),
            dt0=raw.get("solver.dt0", base.solver.dt0),
            nonlinear=raw.get("solver.nonlinear", True),
        )
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    case = raw.get("case", base.case)
    if case not in CASES:
        raise ConfigError(f"case must be one of {CASES}, got {case!r}")
    checks = raw.get("checks", base.checks)
    bad = [c for c in checks if c not in CHECKS]
    if bad:
        raise ConfigError(f"unknown check name(s) {bad}; registered: {CHECKS}")
    dr = raw.get("grid.dr", base.dr)
    if not dr > 0 or not math.isfinite(dr):
        raise ConfigError("grid.dr must be positive")
    if not 0 < solver.cfl <= 1:
        raise ConfigError("solver.cfl must lie in (0, 1]")
    return ExperimentConfig(
        model=model, dr=dr, r_max=raw.get("grid.r_max"), solver=solver,
        threshold=raw.get("solver.threshold", base.threshold),
        rtol=raw.get("solver.rtol", base.rtol),
        max_refinements=raw.get("solver.max_refinements", base.max_refinements),
        sweep=_sweep(raw), case=case, checks=tuple(checks),
        output_dir=raw.get("output_dir", base.output_dir), seed=raw.get("seed", base.seed),
        ode_C=raw.get("ode.C", 1.0), ode_c0=raw.get("ode.c0", 1.0),
        ledger_C1=raw.get("ledger.C1", 1.0), ledger_j_max=raw.get("ledger.j_max", 30),
        ledger_T0=raw.get("ledger.T0", 1.0),
    )
