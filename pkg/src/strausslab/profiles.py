"""Radial initial-data profiles f(r), g(r)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KINDS = ("quartic", "constant")


@dataclass(frozen=True)
class Profile:
    """Initial data shapes, scaled by eps in the Cauchy problem.

    ``quartic`` is A(1-(r/R)^2)^4 on r < R and zero outside, which is C^3 at
    the support edge. ``constant`` is A everywhere and only makes sense in
    the 0-d ODE mode.
    """

    kind: str = "quartic"
    A_f: float = 1.0
    A_g: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}; expected one of {KINDS}")

    def _shape(self, r, R):
        r = np.asarray(r, dtype=float)
        if self.kind == "constant":
            return np.ones_like(r)
        s = np.clip(1.0 - (r / R) ** 2, 0.0, None)
        return s**4

    def f(self, r, R):
        return self.A_f * self._shape(r, R)

    def g(self, r, R):
        return self.A_g * self._shape(r, R)
