"""Exception types shared across the package."""


class PhSwingError(Exception):
    """Base class for package errors."""


class ConfigError(PhSwingError):
    """Invalid or malformed configuration / input data (CLI exit code 1).

    ``code`` is the machine-parsable token used in the CLI's stderr prefix.
    """

    def __init__(self, message, code: str = "CONFIG"):
        super().__init__(message)
        self.code = code


class CflError(PhSwingError):
    """Time step violates the advection stability bound (CLI exit code 2)."""


class NumericsError(PhSwingError):
    """Non-finite state or other numerical failure (CLI exit code 2)."""
