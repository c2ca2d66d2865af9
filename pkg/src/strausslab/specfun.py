"""Modified Bessel functions, Gauss hypergeometric series, Pochhammer symbol.

All routines are written from scratch in double precision:

* ``bessel_k`` integrates K_nu(t) = int_0^inf exp(-t cosh z) cosh(nu z) dz
  with composite Gauss-Legendre panels, doubling the panel count until two
  refinements agree.
* ``bessel_i`` sums the ascending series (positive terms, no cancellation).
* ``hyp2f1`` sums the Gauss series with a tail estimate, vectorized over z.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import AccuracyError, DomainError

_GL_ORDER = 20
_K_RTOL = 1e-12
_K_MIN_PANELS = 8
_K_MAX_PANELS = 1 << 14
_HYP_TERM_CAP = 10**6


def pochhammer(m: float, k: int) -> float:
    """Rising factorial (m)_k."""
    if k < 0 or int(k) != k:
        raise DomainError(f"k must be a nonnegative integer, got {k}")
    out = 1.0
    for j in range(int(k)):
        out *= m + j
    return out


@lru_cache(maxsize=None)
def _gauss_legendre(order: int):
    return np.polynomial.legendre.leggauss(order)


def _k_cutoff(nu: float, t: float) -> float:
    return math.acosh(1.0 + 40.0 / t + 20.0 / t * abs(nu))


def _k_panels(nu: float, t: float, zmax: float, panels: int) -> float:
    x, w = _gauss_legendre(_GL_ORDER)
    h = zmax / panels
    left = np.arange(panels) * h
    z = (left[:, None] + 0.5 * h * (x[None, :] + 1.0)).ravel()
    # exp(-t) is factored out: cosh z - 1 = 2 sinh^2(z/2) avoids cancellation.
    f = np.exp(-2.0 * t * np.sinh(0.5 * z) ** 2 + abs(nu) * z) * 0.5 * (1.0 + np.exp(-2.0 * abs(nu) * z))
    return 0.5 * h * float(np.dot(np.tile(w, panels), f))


def bessel_k(nu: float, t: float) -> float:
    """Modified Bessel function of the second kind K_nu(t), t > 0."""
    if not t > 0:
        raise DomainError(f"K_nu(t) needs t > 0, got {t}")
    zmax = _k_cutoff(nu, t)
    panels = _K_MIN_PANELS
    prev = _k_panels(nu, t, zmax, panels)
    while panels < _K_MAX_PANELS:
        panels *= 2
        cur = _k_panels(nu, t, zmax, panels)
        if abs(cur - prev) <= _K_RTOL * abs(cur):
            return cur * math.exp(-t)
        prev = cur
    raise AccuracyError(f"K_{nu}({t}) quadrature did not converge")


def bessel_k_prime(nu: float, t: float) -> float:
    """d/dt K_nu(t) = -K_{nu+1}(t) + (nu/t) K_nu(t)."""
    return -bessel_k(nu + 1.0, t) + nu / t * bessel_k(nu, t)


def bessel_i(nu: float, t: float) -> float:
    """Modified Bessel function of the first kind I_nu(t) by its ascending series."""
    if t < 0 or nu < 0:
        raise DomainError("bessel_i needs t >= 0 and nu >= 0")
    if t == 0:
        return 1.0 if nu == 0 else 0.0
    return (0.5 * t) ** nu * _i_reduced_series(nu, t)


def _i_reduced_series(nu: float, t):
    """sum_k (t^2/4)^k / (k! Gamma(k+nu+1)), i.e. (t/2)^-nu I_nu(t); vectorized."""
    q = 0.25 * np.asarray(t, dtype=float) ** 2
    term = np.full_like(q, 1.0 / math.gamma(nu + 1.0))
    total = term.copy()
    for k in range(1, 2000):
        term = term * q / (k * (k + nu))
        total = total + term
        if np.all(term <= 1e-17 * total):
            return total if total.ndim else float(total)
    raise AccuracyError(f"I_{nu} series did not converge")


def hyp2f1(a: float, b: float, c: float, z, tol: float = 1e-16):
    """Gauss hypergeometric series F(a, b; c; z) for |z| < 1.

    Accepts scalar or array ``z``. Summation stops once the next term, times
    a geometric bound on the remaining tail, is below ``tol`` of the sum.
    """
    if c <= 0 and float(c).is_integer():
        raise DomainError(f"c = {c} is a nonpositive integer")
    z = np.asarray(z, dtype=float)
    if np.any(np.abs(z) >= 1):
        raise DomainError("hyp2f1 series needs |z| < 1")
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    term = np.ones_like(z)
    total = np.ones_like(z)
    zmax = float(np.max(np.abs(z))) if z.size else 0.0
    for k in range(_HYP_TERM_CAP):
        term *= z
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0))
        total += term
        if k % 8 == 7 or zmax == 0.0:
            tmax = float(np.max(np.abs(term)))
            if tmax == 0.0:
                break
            # Later term ratios are bounded by max(|ratio_k+1|, 1) * |z| once that is < 1.
            r_next = abs((a + k + 1) * (b + k + 1) / ((c + k + 1) * (k + 2.0)))
            q = max(r_next, 1.0) * zmax
            if q < 1 and tmax * q / (1.0 - q) <= tol * float(np.min(np.abs(total))):
                break
    else:
        raise AccuracyError(f"hyp2f1({a}, {b}; {c}) hit the {_HYP_TERM_CAP}-term cap")
    return float(total[0]) if scalar else total


def hyp2f1_prime(a: float, b: float, c: float, z):
    """d/dz F(a, b; c; z) = (ab/c) F(a+1, b+1; c+1; z)."""
    return a * b / c * hyp2f1(a + 1.0, b + 1.0, c + 1.0, z)


def hyp2f1_continued(a: float, b: float, c: float, z, z0: float = 0.9, rtol: float = 1e-12):
    """F and dF/dz on z0 <= z < 1 by integrating the hypergeometric equation from z0.

    The series is slow near z = 1, where it needs O(1/(1-z)) terms. In
    s = -log(1-z) the solution is smooth: with v = (1-z) F',

        F_s = v,   v_s = ab (1-z) F / z - (c - (a+b) z) v / z,

    started from the series values at z0. Returns (F, F') as arrays.
    """
    from scipy.integrate import solve_ivp

    z = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(z < z0) or np.any(z >= 1):
        raise DomainError(f"continuation needs {z0} <= z < 1")
    s = -np.log1p(-z)
    s0 = -math.log1p(-z0)

    def rhs(si, y):
        zi = -math.expm1(-si)
        return [y[1], a * b * (1.0 - zi) * y[0] / zi - (c - (a + b) * zi) * y[1] / zi]

    y0 = [hyp2f1(a, b, c, z0), (1.0 - z0) * hyp2f1_prime(a, b, c, z0)]
    order = np.argsort(s)
    sol = solve_ivp(rhs, (s0, max(float(s.max()), s0)), y0, method="DOP853", rtol=rtol,
                    atol=1e-300, t_eval=s[order])
    if not sol.success:
        raise AccuracyError(f"hypergeometric continuation failed: {sol.message}")
    F = np.empty_like(z)
    v = np.empty_like(z)
    F[order], v[order] = sol.y[0], sol.y[1]
    return F, v / (1.0 - z)
