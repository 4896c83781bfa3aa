"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


class InputError(ValueError):
    """Operation received data that violates its preconditions."""


class DimensionError(InputError):
    """Vector or matrix dimension does not match what the model expects."""


class UndefinedAngleError(InputError):
    """Both angle components are zero, so no direction can be decoded."""


class FitError(RuntimeError):
    """Model fitting failed (degenerate data or numerical breakdown)."""


class TaskFailure(RuntimeError):
    """Contour-following lost contact; carries the partial trajectory."""

    def __init__(self, message, log=None):
        super().__init__(message)
        self.log = log
