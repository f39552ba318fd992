"""Exception types shared across the package."""


class TrimfitError(Exception):
    """Base class for all package-specific errors."""


class NotPositiveDefinite(TrimfitError):
    """A matrix required to be positive definite failed its Cholesky test."""


class ShapeMismatch(TrimfitError, ValueError):
    """Array arguments have incompatible or invalid shapes."""


class InvalidH(TrimfitError, ValueError):
    """The number of kept samples h is outside [1, n]."""


class LineSearchFailed(TrimfitError, RuntimeError):
    """Backtracking shrank the step below 1e-16 without finding descent."""


class TooManySubsets(TrimfitError, ValueError):
    """Exhaustive subset enumeration would exceed the configured limit."""


class InvalidTau(TrimfitError, ValueError):
    """The concentration-rate parameter tau must exceed 2."""


class InvalidCounts(TrimfitError, ValueError):
    """Sample/outlier counts violate a calculator's preconditions."""


class NonPositiveCurvature(TrimfitError, ValueError):
    """A curvature constant that must be positive was not."""


class IncompatibleData(TrimfitError, ValueError):
    """Dataset kind does not match the requested estimator or loss."""


class CliInputError(TrimfitError, ValueError):
    """Malformed command-line input (bad CSV, bad config key, ...)."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line
