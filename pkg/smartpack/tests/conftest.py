"""Shared pytest fixtures for the packaging twin tests.

Provides:
- Isolated temporary directory as SMARTPACK_BASE_DIR so every test gets its own
  output/, calibration/ and scenarios/ lookups.
- The bundled anchors and scenarios, read from the project tree.
- A ``make_config`` factory that validates scenarios the way the loader does.
"""

from pathlib import Path
from typing import Any, Callable, Dict

import pytest

from smartpack.core.config import PROJECT_ROOT
from smartpack.schemas.params import ModelParams
from smartpack.schemas.scenario import ScenarioConfig

BUNDLED_ANCHORS = PROJECT_ROOT / "anchors" / "paper_anchors.csv"
BUNDLED_SCENARIOS = PROJECT_ROOT / "scenarios"


# ---------------------------------------------------------------------------
# Environment isolation
# ---------------------------------------------------------------------------

@pytest.fixture(autouse=True)
def _isolate_env(tmp_path, monkeypatch):
    """Point every SMARTPACK_* path at a disposable tmp_path."""
    monkeypatch.setenv("SMARTPACK_BASE_DIR", str(tmp_path))
    monkeypatch.setenv("SMARTPACK_OUTPUT", str(tmp_path / "output"))
    monkeypatch.delenv("SMARTPACK_PARAMS", raising=False)
    monkeypatch.delenv("SMARTPACK_ANCHORS", raising=False)
    monkeypatch.delenv("SMARTPACK_WORKERS", raising=False)
    monkeypatch.setenv("SMARTPACK_LOG_JSON", "true")

    # Clear cached settings so each test picks up the new env
    from smartpack.core.config import get_settings
    get_settings.cache_clear()

    yield

    get_settings.cache_clear()


# ---------------------------------------------------------------------------
# Bundled data
# ---------------------------------------------------------------------------

@pytest.fixture()
def params() -> ModelParams:
    """Calibrated defaults (identical to calibration/params.json)."""
    return ModelParams()


@pytest.fixture()
def anchors_path() -> Path:
    return BUNDLED_ANCHORS


@pytest.fixture()
def anchors(anchors_path):
    from smartpack.core.dependencies import get_anchor_repo
    return get_anchor_repo().load(anchors_path)


@pytest.fixture()
def scenario_path() -> Callable[[str], Path]:
    def _path(name: str) -> Path:
        return BUNDLED_SCENARIOS / f"{name}.json"
    return _path


def build(raw: Dict[str, Any]) -> ScenarioConfig:
    from smartpack.repositories.scenario_repo import build_config
    return build_config(raw, ModelParams())


@pytest.fixture()
def make_config() -> Callable[..., ScenarioConfig]:
    """Scenario factory: ``make_config(duration_h=2, environment={...})``."""
    def _make(**raw: Any) -> ScenarioConfig:
        raw.setdefault("name", "test")
        raw.setdefault("duration_h", 1.0)
        return build(raw)
    return _make
