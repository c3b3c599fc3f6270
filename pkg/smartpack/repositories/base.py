"""Base repository with exclusive, atomic file writes."""

import logging
import os
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, TextIO

from smartpack.core.config import Settings
from smartpack.core.exceptions import StorageError

logger = logging.getLogger(__name__)


class FileRepository:
    """Base class for all file-backed repositories.

    ``_exclusive()`` holds a pid lock next to the target, yields a text handle on a
    temporary sibling and moves it into place on success, so readers never see a
    half-written file and two writers never interleave.
    """

    def __init__(self, settings: Settings) -> None:
        self._settings = settings

    @staticmethod
    def _acquire(lock: Path) -> None:
        for _ in range(2):
            try:
                fd = os.open(str(lock), os.O_CREAT | os.O_EXCL | os.O_WRONLY)
            except FileExistsError:
                try:
                    pid = int(lock.read_text().strip() or "0")
                    os.kill(pid, 0)
                except (OSError, ValueError):
                    logger.warning("removing stale lock %s", lock)
                    lock.unlink(missing_ok=True)
                    continue
                raise StorageError(f"{lock.with_suffix('')} is being written by process {pid}") from None
            except OSError as exc:
                raise StorageError(f"cannot lock {lock}", detail=str(exc)) from exc
            with os.fdopen(fd, "w") as fh:
                fh.write(str(os.getpid()))
            return
        raise StorageError(f"cannot acquire {lock}")

    @contextmanager
    def _exclusive(self, path: Path) -> Iterator[TextIO]:
        """Context manager for a locked, atomic text write to ``path``."""
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StorageError(f"cannot create {path.parent}", detail=str(exc)) from exc
        lock = path.with_name(path.name + ".lock")
        self._acquire(lock)
        tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
        try:
            with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
                yield fh
            os.replace(tmp, path)
        except OSError as exc:
            raise StorageError(f"cannot write {path}", detail=str(exc)) from exc
        finally:
            tmp.unlink(missing_ok=True)
            lock.unlink(missing_ok=True)

    @staticmethod
    def _read_text(path: Path) -> str:
        try:
            return Path(path).read_text(encoding="utf-8")
        except FileNotFoundError as exc:
            raise StorageError(f"{path} does not exist") from exc
        except OSError as exc:
            raise StorageError(f"cannot read {path}", detail=str(exc)) from exc
