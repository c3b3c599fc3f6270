"""Scenario JSON files, merged onto the calibrated defaults and validated."""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import ValidationError as PydanticValidationError

from smartpack.core.config import Settings
from smartpack.core.exceptions import ConfigError, DataError, StorageError
from smartpack.core.utils import deep_merge
from smartpack.repositories.base import FileRepository
from smartpack.schemas.params import ModelParams
from smartpack.schemas.scenario import ScenarioConfig
from smartpack.services.engine import validate_config

logger = logging.getLogger(__name__)


def scenario_defaults(params: ModelParams) -> Dict[str, Any]:
    """Scenario keys filled from the parameter file: food and every device block."""
    dumped = params.model_dump(mode="json")
    return {
        "food": dumped["spoilage"],
        "device": {key: dumped[key] for key in ("sensor", "rf", "thermal", "release")},
    }


def build_config(raw: Dict[str, Any], params: ModelParams) -> ScenarioConfig:
    """Validate a raw scenario mapping; errors carry the dotted field path."""
    merged = deep_merge(scenario_defaults(params), raw)
    try:
        config = ScenarioConfig.model_validate(merged)
    except PydanticValidationError as exc:
        first = exc.errors()[0]
        field_path = ".".join(str(p) for p in first["loc"])
        raise ConfigError(first["msg"], field_path=field_path) from exc
    validate_config(config)
    return config


class ScenarioRepo(FileRepository):

    def __init__(self, settings: Settings, params: ModelParams) -> None:
        super().__init__(settings)
        self._params = params

    def resolve(self, path: Path) -> Path:
        """Accept a file path, a path without ``.json`` or a bundled scenario name."""
        path = Path(path)
        candidates: List[Path] = [path]
        if not path.suffix:
            candidates.append(path.with_suffix(".json"))
            candidates.append(self._settings.scenarios_dir / f"{path.name}.json")
        for candidate in candidates:
            if candidate.is_file():
                return candidate
        raise StorageError(f"scenario {path} not found")

    def load(self, path: Path, overrides: Optional[Dict[str, Any]] = None) -> ScenarioConfig:
        resolved = self.resolve(path)
        try:
            raw = json.loads(self._read_text(resolved))
        except json.JSONDecodeError as exc:
            raise DataError(f"{resolved}: invalid JSON", detail=f"line {exc.lineno}: {exc.msg}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("scenario file must hold a JSON object", field_path=str(resolved))
        if overrides:
            raw = deep_merge(raw, overrides)
        config = build_config(raw, self._params)
        logger.info("loaded scenario %s from %s", config.name, resolved, extra={"scenario": config.name})
        return config
