"""Critical exponents, characteristic roots and regime classification.

Everything here is closed-form double precision arithmetic on the model
parameters of

    u_tt - Δu + mu1/(1+t) u_t + mu2sq/(1+t)^2 u = |u|^p,
    u(0) = eps f,  u_t(0) = eps g,  supp f, g in B_R.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from .errors import DomainError
from .profiles import Profile

CRITICAL_TOL = 1e-9

REGIMES = (
    "parabolic-like",
    "wave-like-subcritical",
    "wave-like-critical",
    "supercritical-untreated",
)


@dataclass(frozen=True)
class ModelParams:
    n: int = 1
    mu1: float = 2.0
    mu2sq: float = 0.0
    p: float = 2.0
    eps: float = 0.5
    R: float = 1.0
    profile: Profile = field(default_factory=Profile)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n}")
        if self.mu1 < 0 or self.mu2sq < 0:
            raise DomainError("mu1 and mu2sq must be nonnegative")
        if not self.p > 1:
            raise DomainError(f"p must exceed 1, got {self.p}")
        if not self.eps > 0 or not self.R > 0:
            raise DomainError("eps and R must be positive")

    @property
    def delta(self) -> float:
        return delta(self.mu1, self.mu2sq)

    def replace(self, **changes) -> "ModelParams":
        d = {k: getattr(self, k) for k in ("n", "mu1", "mu2sq", "p", "eps", "R", "profile")}
        d.update(changes)
        return ModelParams(**d)


@dataclass(frozen=True)
class ExponentReport:
    delta: float
    pS: float
    pF_shifted: float
    gamma: float
    r1: float
    r2: float
    regime: str
    hypothesis_flags: dict

    def to_dict(self) -> dict:
        return asdict(self)


def delta(mu1: float, mu2sq: float) -> float:
    """Discriminant (mu1-1)^2 - 4 mu2sq measuring damping/mass interplay."""
    return (mu1 - 1.0) ** 2 - 4.0 * mu2sq


def gamma(p: float, r: float) -> float:
    return 2.0 + (r + 1.0) * p - (r - 1.0) * p * p


def strauss(r: float) -> float:
    """Positive root of gamma(p, r) = 0; defined for r > 1 only."""
    if not r > 1:
        raise DomainError(f"Strauss exponent needs r > 1, got {r}")
    # (r-1)p^2 - (r+1)p - 2 = 0; roots have opposite signs.
    b = r + 1.0
    return (b + math.sqrt(b * b + 8.0 * (r - 1.0))) / (2.0 * (r - 1.0))


def fujita(n_eff: float) -> float:
    if not n_eff > 0:
        raise DomainError(f"Fujita exponent needs a positive dimension, got {n_eff}")
    return 1.0 + 2.0 / n_eff


def mu_star(n: float) -> float:
    """Damping threshold where fujita(n) == strauss(n + mu_star(n))."""
    return (n * n + n + 2.0) / (n + 2.0)


def characteristic_roots(mu1: float, mu2sq: float) -> tuple[float, float]:
    """Roots r1 <= r2 of r^2 - (mu1-1) r + mu2sq = 0."""
    d = delta(mu1, mu2sq)
    if d < 0:
        raise DomainError(f"delta = {d} < 0: characteristic roots are complex")
    s = math.sqrt(d)
    return (mu1 - 1.0 - s) / 2.0, (mu1 - 1.0 + s) / 2.0


def beta_q(n: float, mu1: float, q: float) -> float:
    return (n - mu1 + 1.0) / 2.0 - 1.0 / q


def _strauss_or_inf(r: float) -> float:
    return strauss(r) if r > 1 else math.inf


def classify(params: ModelParams) -> ExponentReport:
    n, mu1, p = params.n, params.mu1, params.p
    d = delta(mu1, params.mu2sq)
    if d < 0:
        raise DomainError(f"delta = {d} < 0 is outside every treated regime")
    sd = math.sqrt(d)
    r1, r2 = characteristic_roots(mu1, params.mu2sq)
    pS = _strauss_or_inf(n + mu1)
    n_shift = n + (mu1 - 1.0 - sd) / 2.0
    pF = fujita(n_shift) if n_shift > 0 else math.inf
    g = gamma(p, n + mu1)

    thm1 = 1 < p < pS and not abs(p - pS) <= CRITICAL_TOL
    at_pS = math.isfinite(pS) and abs(p - pS) <= CRITICAL_TOL
    above = n - sd > 0 and p > 2.0 / (n - sd)
    thm2 = 0 <= d < n * n and at_pS and above
    bp = beta_q(n, mu1, p)
    flags = {
        "delta_nonneg": d >= 0,
        "thm1_ok": bool(thm1),
        "thm2_ok": bool(thm2),
        "beta_p_admissible": bp > (sd - mu1 + 1.0) / 2.0,
        "beta_p_geq": bp >= 1.0 - mu1,
    }

    if d >= (n + 1) ** 2:
        regime = "parabolic-like"
    elif thm1:
        regime = "wave-like-subcritical"
    elif thm2:
        regime = "wave-like-critical"
    else:
        regime = "supercritical-untreated"

    return ExponentReport(
        delta=d, pS=pS, pF_shifted=pF, gamma=g, r1=r1, r2=r2,
        regime=regime, hypothesis_flags=flags,
    )


def lifespan_bound(params: ModelParams, C: float, case: str) -> float:
    """Upper lifespan bound: C eps^(-2p(p-1)/gamma) or exp(C eps^(-p(p-1)))."""
    if not C > 0:
        raise DomainError("C must be positive")
    report = classify(params)
    p, eps = params.p, params.eps
    if case == "subcritical":
        if not report.hypothesis_flags["thm1_ok"]:
            raise DomainError("sub-critical bound requires delta >= 0 and 1 < p < p_S(n+mu1)")
        return C * eps ** (-2.0 * p * (p - 1.0) / report.gamma)
    if case == "critical":
        if not report.hypothesis_flags["thm2_ok"]:
            raise DomainError("critical bound requires 0 <= delta < n^2, p = p_S(n+mu1), p > 2/(n-sqrt(delta))")
        return math.exp(C * eps ** (-p * (p - 1.0)))
    raise DomainError(f"unknown case {case!r}")
