"""Iteration ledger for the sub-critical case and the critical comparison ODE.

The ledger tracks lower bounds of the form

    G(t) >= D_j (1+t)^(-a_j) (t-T0)^(b_j),   t > T0,

whose exponents grow like p^j.  D_j is doubly exponential in j, so it is
stored as log D_j throughout.

The critical ODE is integrated in the variable tau = log(2+t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import DomainError, NoBlowUp, OverflowGuard
from .exponents import ModelParams, beta_q, characteristic_roots, gamma, strauss
from .numerics import ball_volume

J_MAX_CAP = 200


@dataclass(frozen=True)
class IterationLedger:
    params: ModelParams
    r2: float
    C0: float
    C1: float
    C2: float
    C3: float
    C4: float
    log_D: np.ndarray
    a: np.ndarray
    b: np.ndarray
    alpha: float
    beta_led: float
    Sp_inf: float
    T0: float = 1.0

    @property
    def j_max(self) -> int:
        return len(self.a)

    @property
    def D(self) -> np.ndarray:
        with np.errstate(over="ignore", under="ignore"):
            return np.exp(self.log_D)

    def to_dict(self, max_terms: int = 30) -> dict:
        k = min(max_terms, self.j_max)
        p = self.params
        return {
            "params": {"n": p.n, "mu1": p.mu1, "mu2sq": p.mu2sq, "p": p.p, "eps": p.eps, "R": p.R},
            "r2": self.r2, "C0": self.C0, "C1": self.C1, "C2": self.C2, "C3": self.C3,
            "C4": self.C4, "alpha": self.alpha, "beta_led": self.beta_led,
            "Sp_inf": self.Sp_inf, "T0": self.T0,
            "log_D": self.log_D[:k].tolist(), "a": self.a[:k].tolist(), "b": self.b[:k].tolist(),
        }


def _c4(Sp_inf, alpha, C2, p, g):
    if g <= 0:
        return math.nan
    return math.exp((Sp_inf + alpha * math.log(2.0) + 1.0 - math.log(C2)) * 2.0 * (p - 1.0) / g)


def build_ledger(params: ModelParams, C1_fit: float = 1.0, j_max: int = 30, T0: float = 1.0) -> IterationLedger:
    """Run the exponent and constant recursions up to j_max.

    The D recursion uses the sharp denominator (r2+p b_j+2)(r2+p b_j+3).
    """
    if j_max > J_MAX_CAP:
        raise OverflowGuard(f"j_max = {j_max} exceeds {J_MAX_CAP}")
    if j_max < 1:
        raise DomainError("j_max must be at least 1")
    if not C1_fit > 0:
        raise DomainError("C1_fit must be positive")
    n, mu1, p, eps, R = params.n, params.mu1, params.p, params.eps, params.R
    _, r2 = characteristic_roots(mu1, params.mu2sq)

    C0 = ball_volume(n) ** (1.0 - p) * R ** (-n * (p - 1.0))
    C2 = C1_fit / ((n + r2 + 1.0) * (n + r2 + 2.0))
    alpha = r2 + 1.0 + (n + mu1 - 1.0) * p / 2.0 + n + (r2 + 1.0) / (p - 1.0)
    beta_led = n + r2 + 2.0 + (r2 + 3.0) / (p - 1.0)
    C3 = C0 / beta_led**2
    Sp_inf = 2.0 * p * math.log(p) / (p - 1.0) ** 2 - p * math.log(C3) / (p - 1.0)

    a = np.empty(j_max)
    b = np.empty(j_max)
    log_D = np.empty(j_max)
    a[0] = r2 + 1.0 + (n + mu1 - 1.0) * p / 2.0
    b[0] = n + r2 + 2.0
    log_D[0] = math.log(C2) + p * math.log(eps)
    log_C0 = math.log(C0)
    for j in range(j_max - 1):
        a[j + 1] = r2 + 1.0 + n * (p - 1.0) + p * a[j]
        b[j + 1] = r2 + 3.0 + p * b[j]
        e = r2 + p * b[j]
        log_D[j + 1] = log_C0 + p * log_D[j] - math.log(e + 2.0) - math.log(e + 3.0)

    g = gamma(p, n + mu1)
    return IterationLedger(
        params=params, r2=r2, C0=C0, C1=C1_fit, C2=C2, C3=C3,
        C4=_c4(Sp_inf, alpha, C2, p, g), log_D=log_D, a=a, b=b,
        alpha=alpha, beta_led=beta_led, Sp_inf=Sp_inf, T0=T0,
    )


def closed_forms(ledger: IterationLedger, j: int) -> tuple[float, float, float]:
    """Closed forms (a_j, b_j, log of the lower bound for D_j)."""
    if j < 1:
        raise DomainError("j must be >= 1")
    n, p = ledger.params.n, ledger.params.p
    r2 = ledger.r2
    pj = p ** (j - 1)
    a_j = ledger.alpha * pj - (n + (r2 + 1.0) / (p - 1.0))
    b_j = ledger.beta_led * pj - (r2 + 3.0) / (p - 1.0)
    return a_j, b_j, pj * (ledger.log_D[0] - ledger.Sp_inf)


def comparison_log_D(ledger: IterationLedger, j: int) -> float:
    """Exact closed form of log E_j for E_{j+1} = C3 E_j^p / p^(2j), E_1 = D_1."""
    p = ledger.params.p
    pj = p ** (j - 1)
    return (pj * ledger.log_D[0]
            - 2.0 * math.log(p) / (p - 1.0) * ((p**j - 1.0) / (p - 1.0) - j)
            + math.log(ledger.C3) * (pj - 1.0) / (p - 1.0))


def comparison_recursion(ledger: IterationLedger) -> np.ndarray:
    p = ledger.params.p
    out = np.empty(ledger.j_max)
    out[0] = ledger.log_D[0]
    lc3, lp = math.log(ledger.C3), math.log(p)
    for j in range(1, ledger.j_max):
        out[j] = lc3 + p * out[j - 1] - 2.0 * j * lp
    return out


def lower_bound_start(ledger: IterationLedger) -> int:
    """First j from which the closed-form lower bound on D_j is claimed."""
    p = ledger.params.p
    return int(math.floor(p * math.log(ledger.C3) / (2.0 * math.log(p)) - 1.0 / (p - 1.0))) + 2


def chain_holds(ledger: IterationLedger, slack: float = 1e-12) -> np.ndarray:
    """Per-step truth of D_{j+1} >= C3 D_j^p / p^(2j) (log domain), j = 1..j_max-1."""
    p = ledger.params.p
    j = np.arange(1, ledger.j_max)
    rhs = math.log(ledger.C3) + p * ledger.log_D[:-1] - 2.0 * j * math.log(p)
    lhs = ledger.log_D[1:]
    return lhs >= rhs - slack * np.maximum(1.0, np.abs(rhs))


def sign_conditions(ledger: IterationLedger) -> dict:
    n, mu1, p = ledger.params.n, ledger.params.mu1, ledger.params.p
    r1, r2 = characteristic_roots(mu1, ledger.params.mu2sq)
    first = r1 - r2 - 1.0 - (n + mu1 - 1.0) * p / 2.0
    later = r1 - r2 - 1.0 - n * (p - 1.0) - p * ledger.a
    return {"first": bool(first <= 0), "iterates": bool(np.all(later <= 0))}


def sum_k_pow(p: float, j: int) -> tuple[float, float]:
    """Both sides of sum_{k=1}^{j-1} k p^(j-1-k) = ((p^j-1)/(p-1) - j)/(p-1)."""
    direct = sum(k * p ** (j - 1 - k) for k in range(1, j))
    return direct, ((p**j - 1.0) / (p - 1.0) - j) / (p - 1.0)


def sum_geometric(p: float, j: int) -> tuple[float, float]:
    """Both sides of sum_{k=1}^{j-1} p^k = (p - p^j)/(1 - p)."""
    return sum(p**k for k in range(1, j)), (p - p**j) / (1.0 - p)


def J_of_t(ledger: IterationLedger, t: float) -> float:
    return (ledger.log_D[0] - ledger.Sp_inf - ledger.alpha * math.log1p(t)
            + ledger.beta_led * math.log(t - ledger.T0))


@dataclass(frozen=True)
class SubcriticalBlowup:
    t_bound: float
    power_bound: float
    beta_minus_alpha: float
    gamma_ratio: float
    J_at_bound: float


def subcritical_blowup_time(ledger: IterationLedger) -> SubcriticalBlowup:
    """Time past which the ledger forces G to be infinite."""
    prm = ledger.params
    p, eps = prm.p, prm.eps
    g = gamma(p, prm.n + prm.mu1)
    if g <= 0:
        raise DomainError(f"gamma(p, n+mu1) = {g} <= 0: no sub-critical bound")
    T0 = ledger.T0
    expo = 2.0 * (p - 1.0) / g
    log_base = ledger.Sp_inf + ledger.alpha * math.log(2.0) + 1.0 - ledger.log_D[0]
    t = max(T0 + math.exp(expo * log_base), 2.0 * T0 + 1.0)
    return SubcriticalBlowup(
        t_bound=t,
        power_bound=ledger.C4 * eps ** (-2.0 * p * (p - 1.0) / g),
        beta_minus_alpha=ledger.beta_led - ledger.alpha,
        gamma_ratio=g / (2.0 * (p - 1.0)),
        J_at_bound=J_of_t(ledger, t),
    )


def p_prime_identity(n: int, mu1: float) -> tuple[float, float]:
    """Both sides of (n+1-beta_p)/p' = 1 + 1/p at p = p_S(n+mu1)."""
    p = strauss(n + mu1)
    bp = beta_q(n, mu1, p)
    return (n + 1.0 - bp) * (p - 1.0) / p, 1.0 + 1.0 / p


# ---------------------------------------------------------------------------
# critical comparison ODE

TAU0 = math.log(4.0)
J_LADDER = (1e9, 1e10, 1e11, 1e12)


@dataclass
class CriticalOdeRun:
    p: float
    C: float
    c0: float
    eps: float
    tau0: float
    tau: np.ndarray
    J: np.ndarray
    Jp: np.ndarray
    tau_star: float
    crossings: list = field(default_factory=list)
    frozen: bool = False

    @property
    def t_star(self) -> float:
        """Lifespan in the original time variable; inf when exp(tau_star) overflows."""
        return math.exp(self.tau_star) - 2.0 if self.tau_star < 700 else math.inf

    def lower_bounds_hold(self, rtol: float = 1e-12) -> bool:
        s = self.c0 * self.eps**self.p
        return bool(np.all(self.J >= s * self.tau * (1 - rtol)) and np.all(self.Jp >= s * (1 - rtol)))

    def to_dict(self, max_points: int = 500) -> dict:
        idx = np.unique(np.linspace(0, len(self.tau) - 1, min(max_points, len(self.tau))).astype(int))
        return {
            "p": self.p, "C": self.C, "c0": self.c0, "eps": self.eps, "tau0": self.tau0,
            "tau_star": self.tau_star, "t_star": self.t_star, "frozen": self.frozen,
            "crossings": [list(c) for c in self.crossings],
            "trajectory": {"tau": self.tau[idx].tolist(), "J": self.J[idx].tolist(),
                           "Jp": self.Jp[idx].tolist()},
        }


def _rhs_factory(p, C, source, tau_frozen):
    def rhs(tau, J, Jp):
        s = tau_frozen if tau_frozen is not None else tau
        return Jp, -2.0 * Jp + C * s ** (1.0 - p) * abs(J) ** p + source
    return rhs


def _rk4(rhs, tau, J, Jp, dt):
    k1 = rhs(tau, J, Jp)
    k2 = rhs(tau + dt / 2, J + dt / 2 * k1[0], Jp + dt / 2 * k1[1])
    k3 = rhs(tau + dt / 2, J + dt / 2 * k2[0], Jp + dt / 2 * k2[1])
    k4 = rhs(tau + dt, J + dt * k3[0], Jp + dt * k3[1])
    return (J + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
            Jp + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]))


def _extrapolate(crossings, p):
    # J ~ A (T - tau)^(-2/(p-1)) makes J^(-(p-1)/2) linear in tau.
    (t0, m0), (t1, m1) = crossings[-2], crossings[-1]
    y0, y1 = m0 ** (-(p - 1) / 2), m1 ** (-(p - 1) / 2)
    return t1 + y1 * (t1 - t0) / (y0 - y1)


def critical_ode_integrate(p: float, C: float = 1.0, c0: float = 1.0, eps: float = 0.1, *,
                           tau0: float = TAU0, frozen: bool = False, dt_max: float = 0.05,
                           rel: float = 1e-6, ladder=J_LADDER, tau_cap: float = 1e7) -> CriticalOdeRun:
    """Integrate J'' + 2J' = C tau^(1-p) J^p + 2 c0 eps^p from J = c0 eps^p tau0, J' = c0 eps^p.

    The constant forcing keeps the lower bounds J >= c0 eps^p tau and
    J' >= c0 eps^p invariant along the flow.  RK4 with the step halved
    until |J''| dt^2 <= rel J; blow-up is declared past the last ladder
    value and the time is extrapolated from the last two crossings.
    With frozen=True the coefficient tau^(1-p) is fixed at tau0.
    """
    if not (p > 1 and C > 0 and c0 > 0 and eps > 0):
        raise DomainError("critical ODE needs p > 1 and positive C, c0, eps")
    s = c0 * eps**p
    rhs = _rhs_factory(p, C, 2.0 * s, tau0 if frozen else None)
    tau, J, Jp = tau0, s * tau0, s
    taus, Js, Jps = [tau], [J], [Jp]
    crossings = []
    level = 0
    while level < len(ladder):
        if tau > tau_cap:
            raise NoBlowUp(f"critical ODE reached tau = {tau:g} without blow-up (eps = {eps})")
        Jpp = rhs(tau, J, Jp)[1]
        dt = dt_max
        while abs(Jpp) * dt * dt > rel * J:
            dt *= 0.5
        J_new, Jp_new = _rk4(rhs, tau, J, Jp, dt)
        while level < len(ladder) and J_new >= ladder[level]:
            M = ladder[level]
            y0, y1, yM = J ** (-(p - 1) / 2), J_new ** (-(p - 1) / 2), M ** (-(p - 1) / 2)
            crossings.append((tau + dt * (y0 - yM) / (y0 - y1), M))
            level += 1
        tau += dt
        J, Jp = J_new, Jp_new
        taus.append(tau)
        Js.append(J)
        Jps.append(Jp)
    tau_star = _extrapolate(crossings, p) if len(crossings) >= 2 else crossings[-1][0]
    return CriticalOdeRun(p=p, C=C, c0=c0, eps=eps, tau0=tau0, tau=np.array(taus), J=np.array(Js),
                          Jp=np.array(Jps), tau_star=tau_star, crossings=crossings, frozen=frozen)


def fixed_step_blowup(p: float, C: float = 1.0, c0: float = 1.0, eps: float = 1.0, *,
                      tau0: float = TAU0, dt: float = 1e-5, ladder=(1e5, 1e6, 1e7),
                      frozen: bool = True, tau_cap: float = 1e3) -> float:
    """Plain fixed-step RK4 reference, extrapolated from its last two ladder crossings."""
    s = c0 * eps**p
    rhs = _rhs_factory(p, C, 2.0 * s, tau0 if frozen else None)
    tau, J, Jp = tau0, s * tau0, s
    crossings = []
    while tau < tau_cap:
        J_new, Jp_new = _rk4(rhs, tau, J, Jp, dt)
        while len(crossings) < len(ladder) and J_new >= ladder[len(crossings)]:
            M = ladder[len(crossings)]
            y0, y1, yM = J ** (-(p - 1) / 2), J_new ** (-(p - 1) / 2), M ** (-(p - 1) / 2)
            crossings.append((tau + dt * (y0 - yM) / (y0 - y1), M))
        if len(crossings) == len(ladder):
            return _extrapolate(crossings, p)
        tau, J, Jp = tau + dt, J_new, Jp_new
    raise NoBlowUp(f"fixed-step reference reached tau = {tau_cap:g}")


# ---------------------------------------------------------------------------
# scaling fits

@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    r_squared: float
    mode: str


def fit_scaling(points, mode: str = "subcritical") -> ScalingFit:
    """Least squares of log T (or log log T in critical mode) against log eps."""
    pts = [(float(e), float(T)) for e, T in points]
    if len(pts) < 3:
        raise DomainError(f"a scaling fit needs at least 3 points, got {len(pts)}")
    eps = np.array([e for e, _ in pts])
    T = np.array([t for _, t in pts])
    if np.any(eps <= 0) or np.any(T <= 0):
        raise DomainError("eps and T must be positive")
    if len(np.unique(eps)) != len(eps):
        raise DomainError("eps values must be distinct")
    if mode == "subcritical":
        y = np.log(T)
    elif mode == "critical":
        if np.any(T <= 1):
            raise DomainError("critical mode needs T > 1 (log log T)")
        y = np.log(np.log(T))
    else:
        raise DomainError(f"unknown fit mode {mode!r}")
    res = stats.linregress(np.log(eps), y)
    return ScalingFit(float(res.slope), float(res.intercept), float(res.rvalue**2), mode)
