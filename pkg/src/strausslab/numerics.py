"""Radial quadrature and step-converged finite differences."""

from __future__ import annotations

import math

import numpy as np

from .errors import AccuracyError


def sphere_measure(n: int) -> float:
    """Surface measure of the unit sphere S^{n-1} (2 for n = 1)."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def ball_volume(n: int, radius: float = 1.0) -> float:
    return sphere_measure(n) / n * radius**n


def simpson(y, h):
    """Composite Simpson on an odd number of equispaced samples."""
    y = np.asarray(y, dtype=float)
    return h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum())


def radial_integral(h, R, n, panels=2048, rtol=1e-10, max_panels=1 << 20):
    """Integral of h(|x|) over the ball B_R in R^n.

    ``h`` is vectorized over radii. Panels double until two Simpson sums
    agree to ``rtol``.
    """
    omega = sphere_measure(n)

    def rule(m):
        r = np.linspace(0.0, R, 2 * m + 1)
        return simpson(h(r) * r ** (n - 1), R / (2 * m))

    prev = rule(panels)
    while panels < max_panels:
        panels *= 2
        cur = rule(panels)
        if abs(cur - prev) <= rtol * abs(cur) or cur == prev:
            return omega * cur
        prev = cur
    raise AccuracyError(f"radial quadrature did not reach rtol={rtol}")


def richardson(values, order=2, ratio=2.0):
    """Extrapolate a sequence computed at steps h, h/ratio, h/ratio^2, ...

    Assumes an even error expansion c_1 h^order + c_2 h^(2 order) + ...
    """
    table = [np.asarray(v, dtype=float) for v in values]
    p = order
    while len(table) > 1:
        f = ratio**p
        table = [(f * table[i + 1] - table[i]) / (f - 1.0) for i in range(len(table) - 1)]
        p += order
    return table[0]


def d1(f, x, h):
    return (f(x + h) - f(x - h)) / (2.0 * h)


def d2(f, x, h):
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)


def extrapolated(residual_at_step, h0, levels=3):
    """Richardson-extrapolate ``residual_at_step(h)`` over h0, h0/2, h0/4."""
    return richardson([residual_at_step(h0 / 2**k) for k in range(levels)])
