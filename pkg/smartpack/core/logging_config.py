"""JSON log lines for simulation and calibration runs."""

import json
import logging
import sys
from datetime import datetime, timezone
from typing import Any, Dict

# Extras callers may attach via ``logger.info(..., extra={...})``
_CONTEXT_FIELDS = ("scenario", "run_id", "model_id", "step")

# Chatty third-party loggers held at WARNING
_QUIET = ("matplotlib", "PIL")


class JsonFormatter(logging.Formatter):
    """One JSON object per record, with run context when present."""

    def format(self, record: logging.LogRecord) -> str:
        entry: Dict[str, Any] = {
            "timestamp": datetime.fromtimestamp(record.created, tz=timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "where": f"{record.module}.{record.funcName}:{record.lineno}",
        }
        entry.update({f: getattr(record, f) for f in _CONTEXT_FIELDS if getattr(record, f, None) is not None})

        exc_type, exc, _ = record.exc_info or (None, None, None)
        if exc is not None:
            entry["exception"] = {"type": exc_type.__name__ if exc_type else None, "message": str(exc)}
        return json.dumps(entry, default=str)


def setup_logging(level: str = "INFO", json_format: bool = True) -> None:
    """Install a single stderr handler on the root logger; stdout is left to command output."""
    root = logging.getLogger()
    level_no = logging.getLevelName(level.upper())
    root.setLevel(level_no if isinstance(level_no, int) else logging.INFO)
    for existing in list(root.handlers):
        root.removeHandler(existing)

    stream = logging.StreamHandler(sys.stderr)
    stream.setFormatter(
        JsonFormatter() if json_format else logging.Formatter("%(asctime)s %(levelname)-7s %(name)s: %(message)s")
    )
    root.addHandler(stream)

    for name in _QUIET:
        logging.getLogger(name).setLevel(logging.WARNING)
