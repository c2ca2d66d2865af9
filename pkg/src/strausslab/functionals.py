"""Space-time functionals of a solver trace and the checks built on them.

Spatial integrals use trapezoid weights on the radial grid (for n = 1 the
discrete Laplacian then sums to zero exactly); time integrals use the
composite trapezoid rule on the snapshot times.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .exponents import ModelParams, characteristic_roots
from .numerics import sphere_measure
from .solver import RadialGrid, SolveTrace
from .testfuncs import CriticalTestFn, SubcriticalTestFn, data_energies, phi_fn

SLACK = 1e-10
Z_CAP = 0.9999
_NEGLIGIBLE = 1e-14


def radial_weights(grid: RadialGrid, n: int) -> np.ndarray:
    """Trapezoid weights w_i with sum_i w_i h(r_i) ~ int_{R^n} h(|x|) dx."""
    if grid.nr == 0:
        return np.ones(1)
    r = grid.r
    w = np.full(r.shape, grid.dr)
    w[0] = w[-1] = 0.5 * grid.dr
    return sphere_measure(n) * r ** (n - 1) * w


def cumtrapz(y, t) -> np.ndarray:
    """Cumulative trapezoid integral starting at 0."""
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    if len(y) > 1:
        out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def derivatives(y, t) -> tuple[np.ndarray, np.ndarray]:
    """First and second derivatives on a possibly non-uniform grid (second order inside)."""
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    d1 = np.gradient(y, t, edge_order=2)
    d2 = np.full_like(y, np.nan)
    h0 = t[1:-1] - t[:-2]
    h1 = t[2:] - t[1:-1]
    d2[1:-1] = 2.0 * (h0 * y[2:] - (h0 + h1) * y[1:-1] + h1 * y[:-2]) / (h0 * h1 * (h0 + h1))
    return d1, d2


SUPPORT_MARGIN = 10


def _mask_cone(r, t, u, R):
    """Nodes inside the physical support |x| <= t + R (plus a few cells) and the cone.

    The explicit scheme leaks a tiny precursor ahead of the light cone;
    it is dropped here because Phi_beta and psi~ grow toward the cone edge.
    """
    m = np.max(np.abs(u))
    dr = r[1] - r[0] if len(r) > 1 else 0.0
    z = (r / (1.0 + t)) ** 2
    keep = (np.abs(u) > _NEGLIGIBLE * m) & (z < Z_CAP) & (r <= t + R + SUPPORT_MARGIN * dr)
    return keep, z


@dataclass
class FunctionalSeries:
    times: np.ndarray
    sup: np.ndarray
    G: np.ndarray
    Lp: np.ndarray
    F: np.ndarray | None = None
    Gb: dict = field(default_factory=dict)
    Hb: dict = field(default_factory=dict)
    Jb: dict = field(default_factory=dict)


def beta_functional(trace: SolveTrace, crit: CriticalTestFn) -> np.ndarray:
    """G_beta(t) = int |u|^p Phi_beta dx on each snapshot (inside the cone)."""
    w = radial_weights(trace.grid, trace.params.n)
    r = trace.grid.r
    out = np.zeros(len(trace.times))
    for k, (t, u) in enumerate(zip(trace.times, trace.snapshots)):
        mask, z = _mask_cone(r, t, u, trace.params.R)
        if not mask.any():
            continue
        phi_b = (1.0 + t) ** (1.0 - crit.beta) * crit.psi(z[mask])
        out[k] = np.sum(w[mask] * np.abs(u[mask]) ** trace.params.p * phi_b)
    return out


def h_and_j(Gb, times) -> tuple[np.ndarray, np.ndarray]:
    """H(t) = int_0^t (t-s)(1+s) G(s) ds and J(t) = int_0^t (2+s)^-3 H(s) ds."""
    t = np.asarray(times, dtype=float)
    y = (1.0 + t) * Gb
    H = t * cumtrapz(y, t) - cumtrapz(t * y, t)
    J = cumtrapz((2.0 + t) ** -3 * H, t)
    return H, J


def evaluate(trace: SolveTrace, sub: SubcriticalTestFn | None = None, betas=()) -> FunctionalSeries:
    params = trace.params
    w = radial_weights(trace.grid, params.n)
    U = trace.snapshots
    if U.size == 0:
        raise DomainError("trace has no snapshots; solve with record=True")
    G = U @ w
    Lp = (np.abs(U) ** params.p) @ w
    F = None
    if sub is not None:
        phi_w = w * phi_fn(trace.grid.r, params.n)
        F = np.array([sub.lam(t) for t in trace.times]) * (U @ phi_w)
    series = FunctionalSeries(times=trace.times.copy(), sup=trace.sup_series.copy(), G=G, Lp=Lp, F=F)
    for beta in betas:
        crit = CriticalTestFn(params.n, params.mu1, params.mu2sq, beta)
        Gb = beta_functional(trace, crit)
        series.Gb[beta] = Gb
        series.Hb[beta], series.Jb[beta] = h_and_j(Gb, trace.times)
    return series


@dataclass
class CheckResult:
    """Outcome of one verification; ``ok`` ignores degenerate samples."""

    name: str
    ok: bool
    residual_max: float
    samples: int
    per_sample: np.ndarray | None = None
    degenerate: bool = False
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {"pass": bool(self.ok), "residual_max": float(self.residual_max), "samples": int(self.samples)}
        if self.degenerate:
            d["degenerate"] = True
        d.update({k: (float(v) if isinstance(v, (np.floating, float)) else v) for k, v in self.extra.items()})
        return d


def report_json(results) -> str:
    return json.dumps({r.name: r.to_dict() for r in results}, indent=2, sort_keys=True)


def _window(series: FunctionalSeries, sup_cap: float | None):
    idx = np.arange(len(series.times))
    if sup_cap is not None:
        bad = np.nonzero(series.sup >= sup_cap)[0]
        if len(bad):
            idx = idx[: bad[0]]
    return idx


def g_dynamics_residual(series: FunctionalSeries, params: ModelParams, nonlinear: bool = True,
                        sup_cap: float | None = 1e2):
    """Residual of G'' + mu1/(1+t) G' + mu2sq/(1+t)^2 G - int |u|^p over the valid window.

    Returns (times, residual, relative L2 norm). The norm is taken relative
    to the largest L2 norm among the individual terms.
    """
    idx = _window(series, sup_cap)
    G1, G2 = derivatives(series.G, series.times)
    t, G, G1, G2 = series.times[idx], series.G[idx], G1[idx], G2[idx]
    s = 1.0 + t
    terms = [G2, params.mu1 / s * G1, params.mu2sq / s**2 * G]
    rhs = series.Lp[idx] if nonlinear else np.zeros_like(G)
    inner = slice(1, len(t) - 1 if len(t) == len(series.times) else len(t))
    res = (terms[0] + terms[1] + terms[2] - rhs)[inner]
    scale = max(np.linalg.norm(x[inner]) for x in terms + [rhs])
    rel = np.linalg.norm(res) / scale if scale > 0 else 0.0
    return t[inner], res, rel


def check_g_dynamics(series, params, nonlinear=True, tol=5e-3, sup_cap=1e2) -> CheckResult:
    t, res, rel = g_dynamics_residual(series, params, nonlinear, sup_cap)
    return CheckResult("g_dynamics", rel < tol, rel, len(t))


def check_key_inequality(series: FunctionalSeries, params: ModelParams, sup_cap=1e2) -> CheckResult:
    """G' + r1/(1+t) G > (1+t)^(-r2-1) int_0^t (1+s)^(r2+1) int|u|^p ds at every sample."""
    r1, r2 = characteristic_roots(params.mu1, params.mu2sq)
    idx = _window(series, sup_cap)
    G1, _ = derivatives(series.G, series.times)
    t, G, G1 = series.times[idx], series.G[idx], G1[idx]
    s = 1.0 + t
    lhs = G1 + r1 / s * G
    rhs = s ** (-r2 - 1.0) * cumtrapz(s ** (r2 + 1.0) * series.Lp[idx], t)
    if len(idx) == len(series.times) and len(idx) > 2:
        # The last derivative is one-sided; near blow-up it is not trustworthy.
        t, lhs, rhs = t[:-1], lhs[:-1], rhs[:-1]
    size = np.maximum(np.abs(lhs), np.abs(rhs))
    degenerate = size <= 1e-300
    ok = lhs - rhs > -SLACK * size
    strict = lhs > rhs
    per = np.where(degenerate, False, ok & (strict | (size > 0)))
    nondeg = ~degenerate
    return CheckResult(
        "key_inequality", bool(nondeg.any() and per[nondeg].all()),
        float(np.max(np.where(nondeg, (rhs - lhs) / np.where(size > 0, size, 1.0), -np.inf), initial=-np.inf)),
        int(nondeg.sum()), per_sample=per, degenerate=not nondeg.any(),
        extra={"margin_min": float(np.min((lhs - rhs)[nondeg])) if nondeg.any() else 0.0},
    )


def priori_exponent(params: ModelParams) -> float:
    """Decay power in the lower bound int|u|^p >= C1 eps^p (1+t)^k."""
    n, mu1, p = params.n, params.mu1, params.p
    return n - 1.0 - (n + mu1 - 1.0) * p / 2.0


def check_priori_bound(series: FunctionalSeries, trace: SolveTrace, sub: SubcriticalTestFn,
                       T0: float = 5.0, sup_cap=1e2) -> CheckResult:
    """Best constant C1 with int|u|^p >= C1 eps^p (1+t)^k on [T0, end], plus its two ingredients.

    The ingredients are F(t) >= 0 and the Hölder split
    int|u|^p (int_{supp} psi^{p'})^(p-1) >= |F|^p, evaluated with the same
    discrete weights, so the second one holds to rounding.
    """
    params = trace.params
    if series.F is None:
        raise DomainError("series lacks F; evaluate with a SubcriticalTestFn")
    idx = _window(series, sup_cap)
    t, Lp, F = series.times[idx], series.Lp[idx], series.F[idx]
    if not np.any(np.abs(F) > 0):
        return CheckResult("priori_bound", False, 0.0, 0, degenerate=True, extra={"C1_fit": 0.0})
    p = params.p
    pp = p / (p - 1.0)
    w = radial_weights(trace.grid, params.n)
    r = trace.grid.r
    phi_pp = phi_fn(r, params.n) ** pp
    holder_ok = []
    for k, tk in zip(idx, t):
        u = trace.snapshots[k]
        nz = np.nonzero(u)[0]
        rho = max(tk + params.R, r[nz[-1]] if len(nz) else 0.0)
        denom = sub.lam(tk) ** pp * np.sum((w * phi_pp)[r <= rho + 1e-12])
        lhs = series.Lp[k] * denom ** (p - 1.0)
        holder_ok.append(lhs >= abs(series.F[k]) ** p * (1.0 - 1e-12))
    F_ok = F >= -SLACK * np.max(np.abs(F))
    late = t >= T0
    if not late.any():
        raise DomainError(f"no samples at or beyond T0 = {T0} in the valid window")
    kexp = priori_exponent(params)
    ratio = Lp[late] / (params.eps**p * (1.0 + t[late]) ** kexp)
    C1 = float(np.min(ratio))
    ok = C1 > 0 and bool(np.all(F_ok)) and bool(np.all(holder_ok))
    return CheckResult("priori_bound", ok, C1, int(late.sum()),
                       extra={"C1_fit": C1, "F_nonneg": bool(np.all(F_ok)), "holder": bool(np.all(holder_ok)),
                              "exponent": kexp})


def check_jbeta_lemma(Gb, times) -> CheckResult:
    """(1+t)^2 J_beta(t) <= 1/2 int_0^t (t-s)^2 G_beta(s) ds at every sample."""
    t = np.asarray(times, dtype=float)
    Gb = np.asarray(Gb, dtype=float)
    _, J = h_and_j(Gb, t)
    lhs = (1.0 + t) ** 2 * J
    rhs = 0.5 * (t * t * cumtrapz(Gb, t) - 2.0 * t * cumtrapz(t * Gb, t) + cumtrapz(t * t * Gb, t))
    size = np.maximum(np.abs(lhs), np.abs(rhs))
    per = lhs <= rhs + SLACK * size
    gap = np.where(size > 0, (lhs - rhs) / np.where(size > 0, size, 1.0), 0.0)
    return CheckResult("jbeta_lemma", bool(per.all()), float(gap.max(initial=0.0)), len(t), per_sample=per,
                       degenerate=not np.any(size > 0))


def fundamental_identity_residual(trace: SolveTrace, crit: CriticalTestFn, sup_cap=1e2):
    """Residual of eps E0 + eps E1 t + int (t-s) G_beta - int u Phi_beta - int (1+s)^-beta int u psi~.

    Returns (times, residual normalized by the largest term, terms dict).
    """
    params = trace.params
    if params.R >= 1:
        raise DomainError("the identity needs data supported in B_R with R < 1")
    prof, R = params.profile, params.R
    E0, E1 = data_energies(lambda r: prof.f(r, R), lambda r: prof.g(r, R), crit, R)
    w = radial_weights(trace.grid, params.n)
    r = trace.grid.r
    times = trace.times
    nsnap = len(times)
    if sup_cap is not None:
        bad = np.nonzero(trace.sup_series >= sup_cap)[0]
        if len(bad):
            nsnap = bad[0]
    t = times[:nsnap]
    I1 = np.zeros(nsnap)
    I2 = np.zeros(nsnap)
    Gb = np.zeros(nsnap)
    for k in range(nsnap):
        u = trace.snapshots[k]
        mask, z = _mask_cone(r, t[k], u, params.R)
        if not mask.any():
            continue
        zk = z[mask]
        psi = crit.psi(zk)
        psi_t = (2.0 * crit.beta + crit.mu1 - 2.0) * psi + 4.0 * zk * crit.psi_prime(zk)
        wu = w[mask] * u[mask]
        s = 1.0 + t[k]
        I1[k] = s ** (1.0 - crit.beta) * np.sum(wu * psi)
        I2[k] = s ** (-crit.beta) * np.sum(wu * psi_t)
        if trace.config.nonlinear:
            Gb[k] = s ** (1.0 - crit.beta) * np.sum(w[mask] * np.abs(u[mask]) ** params.p * psi)
    eps = params.eps
    terms = {
        "E0": np.full(nsnap, eps * E0),
        "E1t": eps * E1 * t,
        "memory": t * cumtrapz(Gb, t) - cumtrapz(t * Gb, t),
        "I1": I1,
        "I2int": cumtrapz(I2, t),
    }
    res = terms["E0"] + terms["E1t"] + terms["memory"] - terms["I1"] - terms["I2int"]
    scale = max(np.max(np.abs(v)) for v in terms.values())
    return t, res / scale, terms


def check_fundamental_identity(trace: SolveTrace, crit: CriticalTestFn, tol=1e-2, sup_cap=1e2) -> CheckResult:
    t, res, _ = fundamental_identity_residual(trace, crit, sup_cap)
    worst = float(np.max(np.abs(res)))
    return CheckResult("fundamental_identity", worst < tol, worst, len(t))


def gbeta_band(series: FunctionalSeries, beta: float, sup_cap=None):
    """G_beta / ((1+t)^(1-beta) int|u|^p) at every sample with nonzero u."""
    idx = _window(series, sup_cap)
    t = series.times[idx]
    Lp = series.Lp[idx]
    ok = Lp > 0
    return series.Gb[beta][idx][ok] / ((1.0 + t[ok]) ** (1.0 - beta) * Lp[ok])
