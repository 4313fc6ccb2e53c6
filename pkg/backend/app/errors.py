"""Exception hierarchy shared by every stage of the pipeline.

The CLI maps ConfigError to exit code 1 and every other PhysioSSLError
to exit code 2.
"""

from __future__ import annotations


class PhysioSSLError(Exception):
    """Base class for all pipeline errors."""


class ConfigError(PhysioSSLError, ValueError):
    """Invalid configuration value or combination of values."""


class InputError(PhysioSSLError, ValueError):
    """Malformed or out-of-contract input data."""


class CheckpointError(PhysioSSLError):
    """Unreadable, truncated or incompatible checkpoint file."""

    def __init__(self, message: str, array_name: str = ""):
        super().__init__(message)
        self.array_name = array_name


class DivergenceError(PhysioSSLError, RuntimeError):
    """Training produced a non-finite loss."""


class GradientError(PhysioSSLError, RuntimeError):
    """A parameter received a non-finite gradient."""

    def __init__(self, message: str, parameter: str = ""):
        super().__init__(message)
        self.parameter = parameter
