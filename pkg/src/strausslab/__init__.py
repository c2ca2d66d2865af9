"""Numerical workbench for semilinear wave equations with scale-invariant damping and mass.

    u_tt - Δu + mu1/(1+t) u_t + mu2sq/(1+t)^2 u = |u|^p
"""

from .errors import (AccuracyError, BlowUpDetected, ConfigError, DomainError, NoBlowUp, NonFinite,
                     OverflowGuard, StraussLabError, TimedOut)
from .exponents import ExponentReport, ModelParams, classify, delta, fujita, gamma, mu_star, strauss
from .profiles import Profile
from .solver import RadialGrid, SolverConfig, estimate_lifespan, solve_until_blowup

__version__ = "0.1.0"

__all__ = [
    "AccuracyError", "BlowUpDetected", "ConfigError", "DomainError", "NoBlowUp", "NonFinite",
    "OverflowGuard", "StraussLabError", "TimedOut",
    "ExponentReport", "ModelParams", "classify", "delta", "fujita", "gamma", "mu_star", "strauss",
    "Profile", "RadialGrid", "SolverConfig", "estimate_lifespan", "solve_until_blowup",
]
