"""Simulated shear-sensitive tactile sensing, pose perception and contour following."""
from .config import ExperimentConfig, load_config
from .errors import ConfigError, DimensionError, FitError, InputError, TaskFailure, UndefinedAngleError

__version__ = "0.1.0"

__all__ = [
    "ExperimentConfig", "load_config", "ConfigError", "DimensionError", "FitError",
    "InputError", "TaskFailure", "UndefinedAngleError", "__version__",
]
