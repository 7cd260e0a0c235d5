"""Exception and warning types raised across the package."""


class StretchShockError(Exception):
    """Base class for all package errors."""


class DomainError(StretchShockError, ValueError):
    """A query falls outside the region where a quantity is defined."""


class ValidationError(StretchShockError, ValueError):
    """Initial data violate one of the shock-front data conditions.

    ``failures`` holds the structured records of the validation report.
    """

    def __init__(self, message, failures=()):
        super().__init__(message)
        self.failures = list(failures)


class ConstitutiveBreakdown(StretchShockError):
    """Tension at the front reached the inextensibility threshold."""


class QuadratureError(StretchShockError):
    """Adaptive quadrature failed to converge on an interval."""

    def __init__(self, message, interval):
        super().__init__(message)
        self.interval = interval


class StepSizeUnderflow(StretchShockError):
    """The adaptive integrator could not make progress."""

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class InternalError(StretchShockError):
    """An invariant that the algorithm guarantees was observed to fail."""


class UsageError(StretchShockError, ValueError):
    """A function was called with an inconsistent combination of arguments."""


class InsufficientDataError(StretchShockError, ValueError):
    """Too few usable points for a fit."""


class ConfigError(StretchShockError, ValueError):
    """A run configuration could not be parsed or validated."""


class BelowLinearBandWarning(UserWarning):
    """Tension evaluated below the lower end of the linear constitutive band."""
