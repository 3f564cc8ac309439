"""Exception types shared across the package."""


class SnnDetectError(Exception):
    """Base class for all package errors."""


class ConfigError(SnnDetectError, ValueError):
    """Invalid configuration or parameter combination."""


class DataError(SnnDetectError, ValueError):
    """Malformed or inconsistent input data."""


class NumericError(SnnDetectError, RuntimeError):
    """A numerical procedure failed despite valid inputs."""
