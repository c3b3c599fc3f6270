"""Calibrated parameter file (params.json) and residual report."""

import json
import logging
from pathlib import Path
from typing import List, Optional

import pandas as pd
from pydantic import ValidationError as PydanticValidationError

from smartpack.core.exceptions import DataError
from smartpack.core.utils import FLOAT_FORMAT, format_number
from smartpack.repositories.base import FileRepository
from smartpack.schemas.calibration import FitResult
from smartpack.schemas.params import ModelParams

logger = logging.getLogger(__name__)

PARAMS_FILE = "params.json"
RESIDUALS_FILE = "residuals.csv"
FITS_FILE = "fits.csv"


class ParamsRepo(FileRepository):

    def load(self, path: Optional[Path] = None) -> ModelParams:
        path = Path(path) if path is not None else self._settings.params_path
        text = self._read_text(path)
        try:
            return ModelParams.model_validate_json(text)
        except PydanticValidationError as exc:
            first = exc.errors()[0]
            field = ".".join(str(p) for p in first["loc"])
            raise DataError(f"{path}: invalid parameter {field}", detail=first["msg"]) from exc

    def load_or_default(self) -> ModelParams:
        path = self._settings.params_path
        if not path.exists():
            logger.warning("no parameter file at %s; using built-in calibrated defaults", path)
            return ModelParams()
        return self.load(path)

    def save(self, params: ModelParams, out_dir: Path) -> Path:
        path = Path(out_dir) / PARAMS_FILE
        with self._exclusive(path) as fh:
            fh.write(json.dumps(params.model_dump(mode="json"), indent=2, sort_keys=True))
            fh.write("\n")
        return path

    def save_residuals(self, results: List[FitResult], out_dir: Path) -> Path:
        rows = [
            {
                "model_id": r.model_id,
                "provenance": a.provenance,
                "observed": a.observed,
                "predicted": a.predicted,
                "tolerance": a.tolerance,
                "residual": a.residual,
            }
            for r in results
            for a in r.per_anchor
        ]
        fits = [
            {
                "model_id": r.model_id,
                "parameters": ";".join(f"{n}={format_number(v)}" for n, v in r.params.items()),
                "residual": r.residual,
                "iterations": r.iterations,
                "converged": int(r.converged),
                "at_bounds": ";".join(r.at_bounds),
            }
            for r in results
        ]
        path = Path(out_dir) / RESIDUALS_FILE
        with self._exclusive(path) as fh:
            pd.DataFrame(rows).to_csv(fh, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        with self._exclusive(Path(out_dir) / FITS_FILE) as fh:
            pd.DataFrame(fits).to_csv(fh, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        return path
