"""Runtime configuration from SMARTPACK_ environment variables."""

import os
from functools import lru_cache
from pathlib import Path
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings

PROJECT_ROOT = Path(__file__).resolve().parent.parent.parent


def _default_base_dir() -> Path:
    return Path(os.environ.get("SMARTPACK_BASE_DIR", str(PROJECT_ROOT)))


class Settings(BaseSettings):
    """Settings loaded from environment variables with SMARTPACK_ prefix."""

    base_dir: Path = Field(default_factory=_default_base_dir)

    # Calibrated parameter file (SMARTPACK_PARAMS). Falls back to calibration/params.json.
    params: Optional[Path] = Field(default=None)
    anchors: Optional[Path] = Field(default=None)
    output: Optional[Path] = Field(default=None)

    # Logging
    log_level: str = Field(default="INFO")
    log_json: bool = Field(default=True)

    # Process pool size for compare and grid oracles; 1 keeps everything in-process
    workers: int = Field(default=1, ge=1)

    model_config = {
        "env_prefix": "SMARTPACK_",
        "env_file": ".env",
        "env_file_encoding": "utf-8",
        "extra": "ignore",
    }

    # Paths derived from base_dir unless overridden
    @property
    def params_path(self) -> Path:
        return self.params or self.base_dir / "calibration" / "params.json"

    @property
    def anchors_path(self) -> Path:
        return self.anchors or self.base_dir / "anchors" / "paper_anchors.csv"

    @property
    def scenarios_dir(self) -> Path:
        return self.base_dir / "scenarios"

    @property
    def output_dir(self) -> Path:
        p = self.output or self.base_dir / "output"
        p.mkdir(parents=True, exist_ok=True)
        return p


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Cached singleton settings instance."""
    return Settings()
