"""Exception hierarchy for finslerkit."""


class FinslerError(Exception):
    """Base class for all finslerkit errors."""


class UnsupportedOrderError(FinslerError):
    """Jet order outside the supported range {0, 1, 2, 3, 4}."""


class OutOfOrderError(FinslerError):
    """Requested a derivative beyond the truncation order of a jet."""


class DegenerateMetricError(FinslerError):
    """Fundamental tensor failed to be positive definite at a sample."""

    def __init__(self, message, x=None, y=None):
        super().__init__(message)
        self.x = x
        self.y = y


class DegenerateFlagError(FinslerError):
    """Flag pole and transverse vector are (numerically) parallel."""


class QuadratureToleranceError(FinslerError):
    """Sphere quadrature did not reach the requested tolerance."""

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class InvalidParameterError(FinslerError):
    """Metric constructor parameters violate a validity gate."""


class InvalidProfileError(InvalidParameterError):
    """Product-metric profile violates a positivity condition."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class ImplicitSolveError(FinslerError):
    """Newton + bisection failed to solve the implicit metric equation."""


class ResolutionError(FinslerError):
    """Trace grid too coarse for the requested derivative accuracy."""


class DomainError(FinslerError):
    """Point outside the chart domain of a metric."""
