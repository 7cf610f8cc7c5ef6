"""Exception types shared across the package."""


class GreenLabError(Exception):
    """Base class for all errors raised by greenlab."""


class InvalidCoefficientError(GreenLabError, ValueError):
    """Coefficient tensor is malformed, non-finite or fails the ellipticity claim."""


class DimensionMismatchError(GreenLabError, ValueError):
    pass


class GridError(GreenLabError, ValueError):
    pass


class DomainError(GreenLabError, ValueError):
    """A point or region is incompatible with the domain mask."""


class PreconditionError(GreenLabError, ValueError):
    pass


class WindowError(PreconditionError):
    """Requested abscissae fall outside the admissible fit window."""


class DegenerateDataError(GreenLabError, ValueError):
    pass


class NotApplicableError(GreenLabError):
    pass


class ConditionSViolatedError(GreenLabError):
    """The exterior density of the domain vanishes at the requested point."""

    def __init__(self, message, theta=0.0):
        super().__init__(message)
        self.theta = theta


class IterationLimitError(GreenLabError, RuntimeError):
    """Krylov iteration stopped at ``max_iter`` without meeting the tolerance."""

    def __init__(self, message, residual_history):
        super().__init__(message)
        self.residual_history = list(residual_history)


class ConfigError(GreenLabError, ValueError):
    """Configuration problem; ``key`` is the dotted path of the offending entry."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
