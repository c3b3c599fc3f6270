"""Anchor dataset CSV (model_id, input_json, observed, tolerance, provenance)."""

import io
import json
import logging
from pathlib import Path
from typing import Optional

import pandas as pd
from pydantic import ValidationError as PydanticValidationError

from smartpack.core.exceptions import DataError
from smartpack.repositories.base import FileRepository
from smartpack.schemas.calibration import Anchor, AnchorSet

logger = logging.getLogger(__name__)

ANCHOR_COLUMNS = ["model_id", "input_json", "observed", "tolerance", "provenance"]


class AnchorRepo(FileRepository):

    def load(self, path: Optional[Path] = None) -> AnchorSet:
        path = Path(path) if path is not None else self._settings.anchors_path
        text = self._read_text(path)
        try:
            frame = pd.read_csv(io.StringIO(text), dtype={"model_id": str, "input_json": str, "provenance": str})
        except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
            raise DataError(f"{path}: not a CSV file", detail=str(exc)) from exc
        missing = [c for c in ANCHOR_COLUMNS if c not in frame.columns]
        if missing:
            raise DataError(f"{path}: missing columns {', '.join(missing)}")

        anchors = []
        for row_no, row in enumerate(frame.itertuples(index=False), start=2):
            try:
                inputs = json.loads(row.input_json) if isinstance(row.input_json, str) else {}
                anchors.append(
                    Anchor(
                        model_id=row.model_id,
                        inputs=inputs,
                        observed=float(row.observed),
                        tolerance=float(row.tolerance),
                        provenance=row.provenance if isinstance(row.provenance, str) else "",
                    )
                )
            except (json.JSONDecodeError, PydanticValidationError, TypeError, ValueError) as exc:
                raise DataError(f"{path}: invalid anchor on line {row_no}", detail=str(exc)) from exc
        logger.info("loaded %d anchors from %s", len(anchors), path)
        return AnchorSet(anchors=anchors)
