"""Exception types shared across the package."""


class StraussLabError(Exception):
    """Base class for all package errors."""


class DomainError(StraussLabError, ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class AccuracyError(StraussLabError, ArithmeticError):
    """A series or quadrature did not reach its accuracy target."""


class BlowUpDetected(StraussLabError):
    """The numerical solution crossed the active amplitude threshold."""

    def __init__(self, t, amplitude, threshold):
        super().__init__(f"sup|u| = {amplitude:.3e} >= {threshold:.3e} at t = {t:.6g}")
        self.t = t
        self.amplitude = amplitude
        self.threshold = threshold


class NonFinite(BlowUpDetected):
    """NaN or Inf appeared in the solution; treated as blow-up one step earlier."""


class NoBlowUp(StraussLabError):
    """The largest threshold was never reached within the time budget."""


class TimedOut(StraussLabError):
    """T_max was reached without blow-up."""


class OverflowGuard(StraussLabError):
    """Requested sequence length exceeds the supported range."""


class ConfigError(StraussLabError):
    """Malformed or unknown experiment configuration."""
