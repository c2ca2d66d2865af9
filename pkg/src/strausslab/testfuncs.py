"""Test functions for the blow-up arguments and checks of their equations.

Sub-critical case: psi(t, x) = lambda(t) phi(x) with

    lambda(t) = (1+t)^((mu1+1)/2) K_{sqrt(delta)/2}(1+t),    Δphi = phi.

Critical case: the self-similar adjoint solution

    Phi_beta(t, x) = (1+t)^(1-beta) F(a, b; n/2; |x|^2/(1+t)^2)

on the cone |x| < 1+t, with a, b = beta/2 + (mu1-1)/4 +- sqrt(delta)/4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .exponents import delta as _delta
from .numerics import d1, d2, extrapolated, radial_integral
from .specfun import _i_reduced_series, bessel_k, hyp2f1, hyp2f1_continued, hyp2f1_prime

_INI_TOL = 1e-14


def phi_fn(r, n: int):
    """Radial profile of phi(x) = int_{S^{n-1}} e^{x.w} dw (2 cosh r for n = 1)."""
    r = np.abs(np.asarray(r, dtype=float))
    if n == 1:
        out = 2.0 * np.cosh(r)
    else:
        nu = n / 2.0 - 1.0
        # r^(-nu) I_nu(r) = 2^(-nu) sum (r^2/4)^k / (k! Gamma(k+nu+1)), finite at r = 0.
        out = (2.0 * math.pi) ** (n / 2.0) * 2.0 ** (-nu) * _i_reduced_series(nu, r)
    return float(out) if np.ndim(out) == 0 else out


def phi_radial_laplace_residual(r: float, n: int, h0: float | None = None) -> float:
    """|phi'' + (n-1)/r phi' - phi| / phi, Richardson-extrapolated in the step."""
    if not r > 0:
        raise DomainError("residual needs r > 0")
    h0 = h0 or min(0.1, r / 4.0)
    f = lambda x: phi_fn(x, n)  # noqa: E731

    def res(h):
        return d2(f, r, h) + (n - 1) / r * d1(f, r, h) - f(r)

    return abs(float(extrapolated(res, h0))) / f(r)


@dataclass(frozen=True)
class SubcriticalTestFn:
    n: int
    mu1: float
    mu2sq: float

    def __post_init__(self):
        if self.delta < 0:
            raise DomainError(f"delta = {self.delta} < 0")

    @property
    def delta(self) -> float:
        return _delta(self.mu1, self.mu2sq)

    @property
    def order(self) -> float:
        return math.sqrt(self.delta) / 2.0

    def lam(self, t: float) -> float:
        return lambda_fn(t, self.mu1, self.delta)

    def lam_prime(self, t: float) -> float:
        return lambda_prime(t, self.mu1, self.delta)

    def phi(self, r):
        return phi_fn(r, self.n)

    def psi(self, t: float, r):
        return self.lam(t) * self.phi(r)

    def ode_residual(self, t: float, lam=None, h0: float = 0.1) -> float:
        return lambda_ode_residual(t, self.mu1, self.mu2sq, lam=lam, h0=h0)


def lambda_fn(t: float, mu1: float, delta: float) -> float:
    if delta < 0:
        raise DomainError("lambda needs delta >= 0")
    s = 1.0 + t
    return s ** ((mu1 + 1.0) / 2.0) * bessel_k(math.sqrt(delta) / 2.0, s)


def lambda_prime(t: float, mu1: float, delta: float) -> float:
    sd = math.sqrt(delta)
    s = 1.0 + t
    nu = sd / 2.0
    return ((mu1 + 1.0 + sd) / 2.0 * s ** ((mu1 - 1.0) / 2.0) * bessel_k(nu, s)
            - s ** ((mu1 + 1.0) / 2.0) * bessel_k(nu + 1.0, s))


def lambda_ode_residual(t, mu1, mu2sq, lam=None, h0=0.1, levels=3):
    """Normalized residual of (1+t)^2 l'' - mu1 (1+t) l' + (mu1+mu2sq-(1+t)^2) l.

    ``lam`` defaults to the true lambda; any callable may be passed to check
    that the detector rejects a wrong function.
    """
    if lam is None:
        d = _delta(mu1, mu2sq)
        lam = lambda s: lambda_fn(s, mu1, d)  # noqa: E731
    s = 1.0 + t
    h0 = min(h0, s / 4.0)

    def res(h):
        return s * s * d2(lam, t, h) - mu1 * s * d1(lam, t, h) + (mu1 + mu2sq - s * s) * lam(t)

    return abs(float(extrapolated(res, h0, levels))) / (s * s * abs(lam(t)))


def psi_lp_norm_bound(ts, n, mu1, delta, p, R, slack=2.0):
    """Compare int_{|x|<=t+R} psi^{p'} dx with its closed-form majorant.

    The majorant's constant is calibrated at t = 1 as ``slack`` times the
    ratio lhs/majorant there. Returns (lhs, rhs) arrays.
    """
    pp = p / (p - 1.0)
    nu = math.sqrt(delta) / 2.0

    def lhs_at(t):
        lam = lambda_fn(t, mu1, delta)
        return lam**pp * radial_integral(lambda r: phi_fn(r, n) ** pp, t + R, n)

    def shape(t):
        s = 1.0 + t
        expo = n - 1.0 + ((mu1 + 1.0) / 2.0 - (n - 1.0) / 2.0) * pp
        return s**expo * math.exp(pp * (t + R)) * bessel_k(nu, s) ** pp

    C = slack * lhs_at(1.0) / shape(1.0)
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    lhs = np.array([lhs_at(t) for t in ts])
    rhs = np.array([C * shape(t) for t in ts])
    return lhs, rhs


def c_fg(f, g, sub: SubcriticalTestFn, R: float, grid: int = 4097) -> float:
    """Data constant int (g lambda(0) + (mu1 lambda(0) - lambda'(0)) f) phi dx."""
    r1 = (sub.mu1 - 1.0 - math.sqrt(sub.delta)) / 2.0
    r = np.linspace(0.0, R, grid)
    fr, gr = np.asarray(f(r), dtype=float), np.asarray(g(r), dtype=float)
    scale = max(np.max(np.abs(fr)), np.max(np.abs(gr)), 1.0)
    if np.any(fr < -_INI_TOL * scale) or np.any(gr + r1 * fr < -_INI_TOL * scale):
        raise DomainError("data violate f >= 0 and g + r1 f >= 0")
    l0, lp0 = sub.lam(0.0), sub.lam_prime(0.0)
    return radial_integral(lambda x: (g(x) * l0 + (sub.mu1 * l0 - lp0) * f(x)) * phi_fn(x, sub.n), R, sub.n)


@dataclass(frozen=True)
class CriticalTestFn:
    n: int
    mu1: float
    mu2sq: float
    beta: float
    check_admissible: bool = True
    a: float = field(init=False)
    b: float = field(init=False)
    c: float = field(init=False)

    def __post_init__(self):
        d = _delta(self.mu1, self.mu2sq)
        if d < 0:
            raise DomainError(f"delta = {d} < 0")
        lo, hi = self.beta_range(self.n, self.mu1, self.mu2sq)
        # The adjoint equation holds for every real beta; only the bounds need the interval.
        if self.check_admissible and not lo < self.beta < hi:
            raise DomainError(f"beta = {self.beta} outside the admissible interval ({lo}, {hi})")
        sd = math.sqrt(d)
        base = self.beta / 2.0 + (self.mu1 - 1.0) / 4.0
        object.__setattr__(self, "a", base + sd / 4.0)
        object.__setattr__(self, "b", base - sd / 4.0)
        object.__setattr__(self, "c", self.n / 2.0)

    @staticmethod
    def beta_range(n, mu1, mu2sq):
        """Open interval ((sqrt(delta)-mu1+1)/2, (n-mu1+1)/2); empty unless delta < n^2."""
        sd = math.sqrt(max(_delta(mu1, mu2sq), 0.0))
        return (sd - mu1 + 1.0) / 2.0, (n - mu1 + 1.0) / 2.0

    @property
    def delta(self) -> float:
        return _delta(self.mu1, self.mu2sq)

    def psi(self, z):
        return hyp2f1(self.a, self.b, self.c, z)

    def psi_prime(self, z):
        return hyp2f1_prime(self.a, self.b, self.c, z)

    def psi_tilde(self, z):
        z = np.asarray(z, dtype=float)
        out = (2.0 * self.beta + self.mu1 - 2.0) * self.psi(z) + 4.0 * z * self.psi_prime(z)
        return float(out) if np.ndim(out) == 0 else out

    def phi_beta(self, t, r):
        t = np.asarray(t, dtype=float)
        r = np.asarray(r, dtype=float)
        if np.any(r >= 1.0 + t):
            raise DomainError("Phi_beta is defined only inside the cone r < 1 + t")
        out = (1.0 + t) ** (1.0 - self.beta) * self.psi(r**2 / (1.0 + t) ** 2)
        return float(out) if np.ndim(out) == 0 else out

    def adjoint_residual(self, t: float, r: float, h0: float | None = None) -> float:
        """|Phi_tt - Δ_r Phi - d/dt(mu1 Phi/(1+t)) + mu2sq Phi/(1+t)^2| / (|Phi| (1+t)^-2)."""
        if r >= 1.0 + t:
            raise DomainError("point outside the cone")
        s = 1.0 + t
        h0 = h0 or min(0.05, r / 4.0 if r > 0 else 0.05, (s - r) / 4.0, s / 4.0)
        n, mu1 = self.n, self.mu1
        in_t = lambda x: self.phi_beta(x, r)  # noqa: E731
        in_r = lambda x: self.phi_beta(t, x)  # noqa: E731
        damp = lambda x: mu1 / (1.0 + x) * self.phi_beta(x, r)  # noqa: E731

        def res(h):
            lap = d2(in_r, r, h) + ((n - 1) / r * d1(in_r, r, h) if r > 0 else (n - 1) * d2(in_r, r, h))
            return d2(in_t, t, h) - lap - d1(damp, t, h) + self.mu2sq / s**2 * in_t(t)

        return abs(float(extrapolated(res, h0))) / (abs(self.phi_beta(t, r)) / s**2)

    def hypergeometric_residual(self, z: float, h0: float = 0.02) -> float:
        """Normalized residual of the ODE psi_beta must satisfy, by finite differences."""
        beta, mu1 = self.beta, self.mu1
        h0 = min(h0, (1.0 - z) / 4.0)
        lin = (beta * (beta + mu1 - 1.0) + self.mu2sq) / 4.0

        def res(h):
            return (z * (1.0 - z) * d2(self.psi, z, h)
                    + (self.n / 2.0 - (beta + 0.5 + mu1 / 2.0) * z) * d1(self.psi, z, h)
                    - lin * self.psi(z))

        scale = abs(self.psi(z)) + abs(self.psi_prime(z))
        return abs(float(extrapolated(res, h0))) / scale


def data_energies(f, g, crit: CriticalTestFn, R: float) -> tuple[float, float]:
    """E0 = int f psi(|x|^2), E1 = int g psi + f((beta-1+mu1) psi + 2|x|^2 psi')."""
    if R >= 1:
        raise DomainError(f"data support radius R = {R} must be < 1")
    if crit.beta < 1.0 - crit.mu1:
        raise DomainError("E1 positivity requires beta >= 1 - mu1")
    n, k = crit.n, crit.beta - 1.0 + crit.mu1
    E0 = radial_integral(lambda r: f(r) * crit.psi(r * r), R, n)
    E1 = radial_integral(
        lambda r: g(r) * crit.psi(r * r) + f(r) * (k * crit.psi(r * r) + 2.0 * r * r * crit.psi_prime(r * r)),
        R, n,
    )
    return E0, E1


def asymptotic_bands(crit: CriticalTestFn, z_hi: float = 0.9999, z_band: float = 0.9, num: int = 2000) -> dict:
    """Observed range of psi on [0, z_hi] and of |psi'|(1-sqrt z)^(beta-(n-mu1-1)/2) on [z_band, z_hi].

    The second band is only meaningful when psi' blows up at z = 1,
    i.e. beta > (n-mu1-1)/2.
    """
    kappa = crit.beta - (crit.n - crit.mu1 - 1.0) / 2.0
    if kappa <= 0:
        raise DomainError("psi' stays bounded at z = 1 unless beta > (n-mu1-1)/2")
    # Near z = 1 the series is slow, so psi is continued through its ODE from z_band.
    zs = np.linspace(0.0, z_hi, num)
    near = zs >= z_band
    psi = np.concatenate([crit.psi(zs[~near]),
                          hyp2f1_continued(crit.a, crit.b, crit.c, zs[near], z_band)[0] if near.any() else []])
    z = 1.0 - np.geomspace(1.0 - z_band, 1.0 - z_hi, num)
    _, dpsi = hyp2f1_continued(crit.a, crit.b, crit.c, z, z_band)
    band = np.abs(dpsi) * (1.0 - np.sqrt(z)) ** kappa
    return {
        "psi_min": float(psi.min()), "psi_max": float(psi.max()),
        "dpsi_min": float(band.min()), "dpsi_max": float(band.max()),
        "dpsi_ratio": float(band.max() / band.min()),
    }
