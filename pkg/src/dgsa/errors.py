"""Exception hierarchy shared across the toolkit."""


class DgsaError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(DgsaError):
    """A configuration document is invalid. Always names the offending key."""

    def __init__(self, key: str, message: str):
        self.key = key
        self.message = message
        super().__init__(f"{key}: {message}")


class DegenerateVarianceError(DgsaError):
    """The model output variance is zero (or not positive), so variance-normalized
    quantities are undefined."""


class UnsupportedMeasureError(DgsaError):
    """A sensitivity measure was requested for a marginal kind it is not defined for."""


class ConstantUnavailableError(DgsaError):
    """No spectral-gap constant can be produced for the distribution."""


class ExpressionSyntaxError(DgsaError):
    """Expression text failed to parse. ``offset`` is the byte offset of the problem."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (at offset {offset})")


class ExpressionDomainError(DgsaError):
    """Evaluation hit a point outside a function's domain (log of a nonpositive
    value, fractional power of a negative base, ...)."""
