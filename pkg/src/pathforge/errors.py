"""Exception types shared across the package."""


class PathforgeError(Exception):
    """Base class for operational failures in this package."""


class SingularFitError(PathforgeError):
    """Raised when a local regression design is rank deficient."""


class SessionParseError(PathforgeError):
    """Raised on malformed session CSV input.

    Carries the 1-based line number of the first offending line.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class IllConditionedError(PathforgeError):
    """Raised when a regression design is too ill conditioned to trust."""


class CoverageGapError(PathforgeError):
    """Raised when a query angle falls inside an uncovered boundary arc."""


class ConfigError(PathforgeError):
    """Raised on malformed configuration files or unknown keys."""
