"""Exception types shared across the library."""


class FracExtError(Exception):
    """Base class for every library-specific failure."""


class OrderTooLarge(FracExtError):
    """Fractional order is not strictly below the certified Holder exponent."""


class ToleranceNotMet(FracExtError):
    """Adaptive refinement exhausted its subdivision budget.

    Carries the best value and error estimate reached so far.
    """

    def __init__(self, message, value=None, error=None):
        super().__init__(message)
        self.value = value
        self.error = error


class MissingDerivative(FracExtError):
    """A classical derivative was required but not supplied."""


class NonConvergent(FracExtError):
    """A boundary-limit sequence failed its Cauchy check."""


class GridTooNarrow(FracExtError):
    """Tabulation grid too small for the requested outer-tail tolerance."""


class FarBoundaryTooClose(FracExtError):
    """The truncated far boundary still carries non-negligible data."""


class SingularMatrix(FracExtError):
    """Tridiagonal solve hit a zero pivot; signals grid pathology."""


class ResidualTooLarge(FracExtError):
    """A constructed stationary function failed its quadrature check."""


class NegativeValues(FracExtError):
    """A solution that must be nonnegative dipped below zero."""


class WindowOutsideJ(FracExtError):
    """A Harnack window does not fit inside the stationarity interval."""


class ConfigInvalid(FracExtError):
    """CLI configuration failed validation (exit code 2)."""


class ComputationFailed(FracExtError):
    """A dispatched computation raised a module error (exit code 3)."""

    def __init__(self, message, category=""):
        super().__init__(message)
        self.category = category
