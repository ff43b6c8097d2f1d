"""Exception types shared across the package."""


class GbspeError(Exception):
    """Base class for package errors."""


class ConfigError(GbspeError):
    """Invalid user-supplied configuration or input file."""


class BudgetExceededError(GbspeError):
    """A requested computation exceeds the configured hafnian budget."""

    def __init__(self, message, estimated_ops=None):
        super().__init__(message)
        self.estimated_ops = estimated_ops


class IllPosedError(GbspeError):
    """The target mean is too close to zero for a guaranteed sample size."""


class InternalInconsistencyError(GbspeError):
    """An internal invariant was violated (indicates a bug, not bad input)."""
