"""Exception types shared across the package."""


class ConfigError(Exception):
    """Raised for malformed or unknown configuration input (CLI exit code 2)."""


class NumericalError(RuntimeError):
    """Raised when an iterative or factorization step fails (CLI exit code 1)."""
