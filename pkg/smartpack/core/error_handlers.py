"""Maps AppError subclasses to CLI exit codes."""

import logging
from typing import Dict, Type

from smartpack.core.exceptions import (
    AppError,
    CalibrationError,
    ConfigError,
    DataError,
    InvalidInputError,
    StorageError,
    UnsupportedError,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2

# Map exception type -> process exit code
_EXIT_MAP: Dict[Type[AppError], int] = {
    InvalidInputError: EXIT_VALIDATION,
    ConfigError: EXIT_VALIDATION,
    DataError: EXIT_VALIDATION,
    UnsupportedError: EXIT_VALIDATION,
    CalibrationError: EXIT_VALIDATION,
    StorageError: EXIT_IO,
}


def exit_code_for(exc: BaseException) -> int:
    """Exit code for an error raised while running a subcommand."""
    if isinstance(exc, AppError):
        code = _EXIT_MAP.get(type(exc), EXIT_VALIDATION)
        message = exc.message if not exc.detail else f"{exc.message} ({exc.detail})"
        if code == EXIT_IO:
            logger.error("%s: %s", type(exc).__name__, message)
        else:
            logger.warning("%s: %s", type(exc).__name__, message)
        return code
    if isinstance(exc, OSError):
        logger.error("OSError: %s", exc)
        return EXIT_IO
    raise exc
