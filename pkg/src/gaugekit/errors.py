"""Exception hierarchy shared by all gaugekit modules."""


class GaugekitError(Exception):
    """Base class for every error raised by gaugekit."""


class DomainError(GaugekitError, ValueError):
    """A point lies outside the region where a kernel is defined."""


class DataError(GaugekitError, ValueError):
    """Non-finite or negative data where nonnegative finite values are required."""


class ValidationError(GaugekitError, ValueError):
    """A declarative input (measure spec, region, config block) is malformed."""

    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path


class UsageError(GaugekitError, ValueError):
    """Arguments are inconsistent with each other (shape mismatch, wrong operator)."""


class ConvergenceError(GaugekitError, RuntimeError):
    """An iterative method exhausted its budget before meeting its tolerance.

    Attributes
    ----------
    bracket : tuple or None
        Last lower/upper estimate pair for eigenvalue iterations.
    terms : int or None
        Number of series terms used before giving up.
    """

    def __init__(self, message, bracket=None, terms=None):
        super().__init__(message)
        self.bracket = bracket
        self.terms = terms


class ResourceError(GaugekitError, RuntimeError):
    """A requested computation exceeds a configured size ceiling."""

    def __init__(self, message, sizes=None):
        super().__init__(message)
        self.sizes = sizes


class SingularSystemError(GaugekitError, RuntimeError):
    """A direct solve met a numerically singular matrix."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition
