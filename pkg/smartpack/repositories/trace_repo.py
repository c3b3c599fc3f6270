"""Trace, event log and comparison report files.

Every CSV starts with ``#`` header lines carrying the scenario name and config
digest, then the pandas table written with 9 significant digits and LF endings.
"""

import io
import json
from pathlib import Path
from typing import Callable, Dict, TextIO, Tuple

import pandas as pd

from smartpack.core.exceptions import DataError
from smartpack.core.utils import FLOAT_FORMAT
from smartpack.repositories.base import FileRepository
from smartpack.schemas.trace import TRACE_COLUMNS, ComparisonReport, Event, SimulationTrace

TRACE_FILE = "trace.csv"
EVENTS_FILE = "events.csv"
COMPARISON_FILE = "comparison.csv"
SHELF_LIFE_FILE = "shelf_life.json"

EVENT_COLUMNS = ["t_h", "step", "kind", "detail"]
DELTA_COLUMNS = ["scenario", "reference", "column", "final_delta", "max_abs_delta"]


def _header(trace: SimulationTrace) -> str:
    return f"# scenario={trace.scenario}\n# config_digest={trace.config_digest}\n"


def _parse_header(text: str) -> Dict[str, str]:
    meta: Dict[str, str] = {}
    for line in text.splitlines():
        if not line.startswith("#"):
            break
        key, _, value = line[1:].strip().partition("=")
        meta[key] = value
    return meta


def _write_frame(fh: TextIO, frame: pd.DataFrame) -> None:
    frame.to_csv(fh, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


class TraceRepo(FileRepository):

    def save_trace(self, trace: SimulationTrace, out_dir: Path) -> Tuple[Path, Path]:
        out_dir = Path(out_dir)
        trace_path, events_path = out_dir / TRACE_FILE, out_dir / EVENTS_FILE
        with self._exclusive(trace_path) as fh:
            fh.write(_header(trace))
            _write_frame(fh, trace.frame[TRACE_COLUMNS])
        events = pd.DataFrame(
            [{"t_h": e.t_h, "step": e.step, "kind": e.kind.value, "detail": e.detail} for e in trace.events],
            columns=EVENT_COLUMNS,
        )
        with self._exclusive(events_path) as fh:
            fh.write(_header(trace))
            _write_frame(fh, events)
        return trace_path, events_path

    def load_trace(self, path: Path) -> SimulationTrace:
        """Read a trace.csv back, with events from a sibling events.csv when present."""
        path = Path(path)
        text = self._read_text(path)
        meta = _parse_header(text)
        try:
            frame = pd.read_csv(io.StringIO(text), comment="#")
        except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
            raise DataError(f"{path}: not a trace CSV", detail=str(exc)) from exc
        missing = [c for c in TRACE_COLUMNS if c not in frame.columns]
        if missing:
            raise DataError(f"{path}: missing trace columns {', '.join(missing)}")

        trace = SimulationTrace(
            scenario=meta.get("scenario", path.stem),
            config_digest=meta.get("config_digest", ""),
            frame=frame[TRACE_COLUMNS],
        )
        events_path = path.with_name(EVENTS_FILE)
        if events_path.is_file():
            events = pd.read_csv(io.StringIO(self._read_text(events_path)), comment="#", keep_default_na=False)
            trace.events = [
                Event(kind=row.kind, t_h=float(row.t_h), step=int(row.step), detail=str(row.detail))
                for row in events.itertuples(index=False)
            ]
        return trace

    def save_comparison(self, report: ComparisonReport, out_dir: Path) -> Tuple[Path, Path]:
        out_dir = Path(out_dir)
        comparison_path, shelf_path = out_dir / COMPARISON_FILE, out_dir / SHELF_LIFE_FILE
        deltas = pd.DataFrame([d.model_dump() for d in report.deltas], columns=DELTA_COLUMNS)
        with self._exclusive(comparison_path) as fh:
            fh.write(f"# reference={report.reference}\n")
            _write_frame(fh, deltas)
        payload = {
            "reference": report.reference,
            "summaries": [s.model_dump() for s in report.summaries],
            "shelf_life": [s.model_dump() for s in report.shelf_life],
        }
        with self._exclusive(shelf_path) as fh:
            fh.write(json.dumps(payload, indent=2, sort_keys=True))
            fh.write("\n")
        return comparison_path, shelf_path

    def save_svg(self, path: Path, render: Callable[[TextIO], None]) -> Path:
        """Write an SVG produced by ``render(handle)`` to ``path``."""
        path = Path(path)
        with self._exclusive(path) as fh:
            render(fh)
        return path
