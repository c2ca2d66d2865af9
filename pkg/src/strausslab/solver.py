"""Radial finite-difference solver with blow-up detection.

Solves

    u_tt - Δu + mu1/(1+t) u_t + mu2sq/(1+t)^2 u = |u|^p,
    u(0) = eps f(r),  u_t(0) = eps g(r)

on r in [0, r_max] with an explicit leapfrog scheme. The damping term is
averaged over the two neighbouring time levels, so every update is explicit
and second order. The time step may shrink near blow-up; the three-level
formula then uses the non-uniform second difference.
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError, NoBlowUp, TimedOut
from .exponents import ModelParams, classify

log = logging.getLogger(__name__)

THRESHOLD_LADDER = (1e3, 1e4, 1e5, 1e6)


@dataclass(frozen=True)
class RadialGrid:
    r_max: float
    nr: int

    @property
    def dr(self) -> float:
        return self.r_max / self.nr if self.nr else math.inf

    @property
    def r(self) -> np.ndarray:
        return np.arange(self.nr + 1) * self.dr if self.nr else np.zeros(1)

    @classmethod
    def covering(cls, R: float, T_max: float, dr: float) -> "RadialGrid":
        """Smallest grid with spacing ``dr`` whose edge is never reached before T_max."""
        nr = int(math.ceil((R + T_max) / dr)) + 3
        return cls(r_max=nr * dr, nr=nr)

    @classmethod
    def point(cls) -> "RadialGrid":
        """Single node; used by the 0-d ODE mode."""
        return cls(r_max=0.0, nr=0)

    def check_covers(self, R: float, T_max: float) -> None:
        if self.nr and self.r_max < R + T_max + 2 * self.dr:
            raise DomainError(
                f"r_max = {self.r_max} < R + T_max + 2 dr = {R + T_max + 2 * self.dr}; "
                "the outer boundary would be reached"
            )


@dataclass(frozen=True)
class SolverConfig:
    T_max: float = 50.0
    cfl: float = 0.5
    dt0: float = 1e-3          # base step in 0-d mode, where there is no dr
    dt_snap: float | None = None   # defaults to dr (or 10 dt0 in 0-d mode)
    laplacian: bool = True
    nonlinear: bool = True
    record: bool = True
    fine_regime: float = 1e3   # sup|u| above which the local ODE time scale caps dt
    fine_factor: float = 0.1
    dt_scale: float = 1.0      # refinement knob: the base step is multiplied by this


@dataclass
class WaveState:
    t: float
    u_prev: np.ndarray
    u_curr: np.ndarray
    dt: float


@dataclass
class SolveTrace:
    params: ModelParams
    grid: RadialGrid
    config: SolverConfig
    times: np.ndarray
    snapshots: np.ndarray
    sup_series: np.ndarray
    crossings: list
    t_end: float
    blew_up: bool
    timed_out: bool
    steps: int
    dt_base: float

    @property
    def r(self) -> np.ndarray:
        return self.grid.r

    def to_csv(self, path) -> None:
        r = self.grid.r
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("t,r,u\n")
            for t, u in zip(self.times, self.snapshots):
                for ri, ui in zip(r, u):
                    fh.write(f"{t:.10g},{ri:.10g},{ui:.17g}\n")

    def metadata(self) -> dict:
        return {
            "params": _params_dict(self.params),
            "grid": {"r_max": self.grid.r_max, "nr": self.grid.nr, "dr": self.grid.dr if self.grid.nr else None},
            "thresholds": [{"M": M, "t": t} for M, t in self.crossings],
            "t_end": self.t_end,
            "blew_up": self.blew_up,
            "timed_out": self.timed_out,
            "steps": self.steps,
            "dt_base": self.dt_base,
        }

    def write_metadata(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.metadata(), fh, indent=2)


def _params_dict(params: ModelParams) -> dict:
    d = {k: getattr(params, k) for k in ("n", "mu1", "mu2sq", "p", "eps", "R")}
    d["profile"] = asdict(params.profile)
    return d


def radial_laplacian(u: np.ndarray, grid: RadialGrid, n: int) -> np.ndarray:
    """u'' + (n-1)/r u' with a symmetric ghost node at r = 0 and u = 0 at r_max."""
    out = np.zeros_like(u)
    if grid.nr == 0:
        return out
    dr = grid.dr
    inv = 1.0 / (dr * dr)
    out[0] = n * 2.0 * (u[1] - u[0]) * inv
    r = grid.r[1:-1]
    out[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) * inv
    if n > 1:
        out[1:-1] += (n - 1) / r * (u[2:] - u[:-2]) / (2.0 * dr)
    return out


def _forcing(u, t, params: ModelParams, grid: RadialGrid, config: SolverConfig):
    s = 1.0 + t
    out = -params.mu2sq / (s * s) * u
    if config.laplacian:
        out += radial_laplacian(u, grid, params.n)
    if config.nonlinear:
        out += np.abs(u) ** params.p
    return out


def base_step(grid: RadialGrid, config: SolverConfig) -> float:
    dt = config.cfl * grid.dr if (grid.nr and config.laplacian) else config.dt0
    return dt * config.dt_scale


def initial_state(params: ModelParams, grid: RadialGrid, config: SolverConfig, dt: float) -> WaveState:
    """Second-order Taylor start: u(dt) = u0 + dt u1 + dt^2/2 u_tt(0)."""
    r = grid.r
    u0 = params.eps * params.profile.f(r, params.R)
    u1 = params.eps * params.profile.g(r, params.R)
    if grid.nr:
        u0[-1] = u1[-1] = 0.0
    utt = _forcing(u0, 0.0, params, grid, config) - params.mu1 * u1
    u_next = u0 + dt * u1 + 0.5 * dt * dt * utt
    if grid.nr:
        u_next[-1] = 0.0
    return WaveState(t=dt, u_prev=u0, u_curr=u_next, dt=dt)


def step(state: WaveState, params: ModelParams, grid: RadialGrid, config: SolverConfig,
         dt: float | None = None) -> WaveState:
    """Advance one leapfrog step; ``dt`` defaults to the previous step."""
    a = state.dt if dt is None else dt
    b = state.dt
    t = state.t
    u, um = state.u_curr, state.u_prev
    k = params.mu1 * a / (2.0 * (1.0 + t))
    L = _forcing(u, t, params, grid, config)
    u_new = (u + (a / b) * (u - um) + 0.5 * a * (a + b) * L + k * um) / (1.0 + k)
    if grid.nr:
        u_new[-1] = 0.0
    return WaveState(t=t + a, u_prev=u, u_curr=u_new, dt=a)


def support_radius(u: np.ndarray, grid: RadialGrid, rel: float = 1e-14) -> float:
    m = np.max(np.abs(u))
    if m == 0:
        return 0.0
    idx = np.nonzero(np.abs(u) > rel * m)[0]
    return float(grid.r[idx[-1]])


def _crossing_time(t0, m0, t1, m1, M, p):
    # Near blow-up sup|u| ~ C (T - t)^(-2/(p-1)), so m^(-(p-1)/2) is locally linear in t.
    e = -(p - 1.0) / 2.0
    s0, s1, sM = m0**e, m1**e, M**e
    if s0 == s1:
        return t1
    return t0 + (s0 - sM) / (s0 - s1) * (t1 - t0)


def solve_until_blowup(params: ModelParams, grid: RadialGrid, threshold: float = 1e6,
                       config: SolverConfig = SolverConfig(), ladder=THRESHOLD_LADDER,
                       strict: bool = False) -> SolveTrace:
    """Integrate until sup|u| >= ``threshold`` or t >= T_max.

    Every rung of ``ladder`` up to ``threshold`` gets an interpolated
    crossing time. Reaching T_max is a valid, flagged outcome unless
    ``strict`` is set, in which case TimedOut is raised.
    """
    if config.laplacian:
        grid.check_covers(params.R, config.T_max)
    m0 = float(np.max(np.abs(params.eps * params.profile.f(grid.r, params.R))))
    if threshold <= m0:
        raise DomainError(f"threshold {threshold} must exceed the initial amplitude {m0}")
    rungs = sorted(M for M in ladder if M < threshold) + [threshold]
    dt0 = base_step(grid, config)
    dt_snap = config.dt_snap or (grid.dr if (grid.nr and config.laplacian) else 10 * dt0)
    if dt_snap + 1e-12 < dt0:
        raise DomainError("snapshot spacing must not be finer than the time step")
    every = max(1, int(round(dt_snap / dt0)))

    state = initial_state(params, grid, config, dt0)
    times = [0.0]
    snaps = [state.u_prev.copy()] if config.record else []
    sups = [m0]
    crossings = []
    steps = 1
    m_prev, t_prev = m0, 0.0
    m = float(np.max(np.abs(state.u_curr)))
    next_snap = dt_snap
    blew_up = False
    p = params.p

    def record(st, m_):
        times.append(st.t)
        sups.append(m_)
        if config.record:
            snaps.append(st.u_curr.copy())

    if steps % every == 0:
        record(state, m)
        next_snap = state.t + dt_snap
    while True:
        while rungs and m >= rungs[0]:
            crossings.append((rungs[0], _crossing_time(t_prev, m_prev, state.t, m, rungs[0], p)))
            rungs.pop(0)
        if not rungs:
            blew_up = True
            break
        if state.t >= config.T_max:
            break
        dt = dt0
        if m > config.fine_regime:
            dt = min(dt, config.fine_factor * m ** (-(p - 1.0) / 2.0))
        new = step(state, params, grid, config, dt)
        m_new = float(np.max(np.abs(new.u_curr)))
        steps += 1
        if not math.isfinite(m_new):
            # The previous level is the last trustworthy one.
            for M in rungs:
                crossings.append((M, state.t))
            rungs = []
            blew_up = True
            log.debug("non-finite values at t=%g; blow-up recorded at %g", new.t, state.t)
            break
        m_prev, t_prev = m, state.t
        state, m = new, m_new
        if m <= config.fine_regime:
            if steps % every == 0:
                record(state, m)
                next_snap = state.t + dt_snap
        elif state.t >= next_snap - 1e-12:
            record(state, m)
            next_snap = state.t + dt_snap

    timed_out = not blew_up
    if timed_out and strict:
        raise TimedOut(f"no blow-up before T_max = {config.T_max}")
    return SolveTrace(
        params=params, grid=grid, config=config,
        times=np.array(times), snapshots=np.array(snaps) if config.record else np.empty((0, grid.nr + 1)),
        sup_series=np.array(sups), crossings=crossings, t_end=state.t,
        blew_up=blew_up, timed_out=timed_out, steps=steps, dt_base=dt0,
    )


@dataclass
class LifespanEstimate:
    T_est: float
    T_at_threshold: list
    dt_used: float
    converged: bool
    params: ModelParams
    history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "T_est": self.T_est,
            "T_at_threshold": [{"M": M, "t": t} for M, t in self.T_at_threshold],
            "dt_used": self.dt_used,
            "converged": self.converged,
            "params": _params_dict(self.params),
            "history": self.history,
        }


def extrapolate_blowup(crossings, p: float) -> float:
    """Least-squares fit T(M) = T_est - c M^(-(p-1)/2) over the threshold ladder."""
    M = np.array([c[0] for c in crossings], dtype=float)
    T = np.array([c[1] for c in crossings], dtype=float)
    if len(M) == 1:
        return float(T[0])
    x = M ** (-(p - 1.0) / 2.0)
    slope, intercept = np.polyfit(x, T, 1)
    return float(intercept)


def estimate_lifespan(params: ModelParams, grid: RadialGrid, config: SolverConfig = SolverConfig(),
                      ladder=THRESHOLD_LADDER, rtol: float = 0.01, max_refinements: int = 4) -> LifespanEstimate:
    """Blow-up time from the threshold ladder, halving dt until two runs agree to ``rtol``."""
    try:
        flags = classify(params).hypothesis_flags
        if not (flags["thm1_ok"] or flags["thm2_ok"]):
            warnings.warn("parameters satisfy neither lifespan theorem's hypotheses", stacklevel=2)
    except DomainError:
        warnings.warn("exponent classification failed for these parameters", stacklevel=2)

    cfg = config if not config.record else _replace(config, record=False)
    history = []
    prev = None
    for k in range(max_refinements + 1):
        trace = solve_until_blowup(params, grid, max(ladder), cfg, ladder)
        if not trace.blew_up:
            raise NoBlowUp(f"sup|u| stayed below {max(ladder)} up to T_max = {cfg.T_max}")
        T_est = extrapolate_blowup(trace.crossings, params.p)
        history.append({"dt": trace.dt_base, "T_est": T_est})
        log.info("eps=%g dt=%g T_est=%.6g", params.eps, trace.dt_base, T_est)
        if prev is not None and abs(T_est - prev) <= rtol * abs(T_est):
            return LifespanEstimate(T_est, trace.crossings, trace.dt_base, True, params, history)
        prev = T_est
        cfg = _replace(cfg, dt_scale=cfg.dt_scale / 2.0)
    return LifespanEstimate(T_est, trace.crossings, trace.dt_base, False, params, history)


def _replace(config: SolverConfig, **changes) -> SolverConfig:
    d = asdict(config)
    d.update(changes)
    return SolverConfig(**d)
