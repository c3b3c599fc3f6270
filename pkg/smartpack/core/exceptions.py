"""Custom exception taxonomy for the packaging twin.

All domain exceptions inherit from AppError. Exit-code mapping is done in error_handlers.py.
Services and repositories raise these, not bare ValueError.
"""


class AppError(Exception):
    """Base application error."""

    def __init__(self, message: str, detail: str = "") -> None:
        self.message = message
        self.detail = detail
        super().__init__(message)


class InvalidInputError(AppError):
    """Non-finite, negative or out-of-domain argument to a model operation."""


class ConfigError(AppError):
    """Scenario or parameter file failed validation."""

    def __init__(self, message: str, field_path: str = "", detail: str = "") -> None:
        self.field_path = field_path
        super().__init__(f"{field_path}: {message}" if field_path else message, detail)


class DataError(AppError):
    """Malformed anchors, trace or parameter file."""


class StorageError(AppError):
    """Filesystem read/write failure or a locked output path."""


class UnsupportedError(AppError):
    """Request outside what an operation supports (e.g. grid dimension)."""


class CalibrationError(AppError):
    """Calibration problem cannot be set up (unknown model, empty anchors)."""
