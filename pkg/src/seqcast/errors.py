"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Operands have non-conforming shapes."""


class ParameterError(ValueError):
    """A hyperparameter or argument is outside its allowed range."""


class DataError(ValueError):
    """Input data is malformed or fails validation."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(ValueError):
    """A run configuration is invalid or references unknown keys."""


class ConvergenceError(RuntimeError):
    """An iterative fit hit its iteration cap; ``last`` holds the final iterate."""

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last
