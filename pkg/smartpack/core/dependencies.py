"""Factories wiring settings and repositories into services.

Usage in the CLI:
    from smartpack.core.dependencies import get_scenario_repo, get_trace_repo
    config = get_scenario_repo().load(path)
    get_trace_repo().save_trace(simulate(config), out_dir)
"""

from typing import Optional

from smartpack.core.config import Settings, get_settings as _get_settings


# -- Settings -----------------------------------------------------------------

def get_settings() -> Settings:
    """Cached settings dependency."""
    return _get_settings()


# -- Repositories -------------------------------------------------------------

def get_anchor_repo() -> "AnchorRepo":
    from smartpack.repositories.anchor_repo import AnchorRepo
    return AnchorRepo(get_settings())


def get_params_repo() -> "ParamsRepo":
    from smartpack.repositories.params_repo import ParamsRepo
    return ParamsRepo(get_settings())


def get_scenario_repo(params: Optional["ModelParams"] = None) -> "ScenarioRepo":
    """Scenario loader whose defaults come from ``params`` or the calibrated file."""
    from smartpack.repositories.scenario_repo import ScenarioRepo
    if params is None:
        params = get_params_repo().load_or_default()
    return ScenarioRepo(get_settings(), params)


def get_trace_repo() -> "TraceRepo":
    from smartpack.repositories.trace_repo import TraceRepo
    return TraceRepo(get_settings())


# -- Services -----------------------------------------------------------------

def get_calibration_service() -> "CalibrationService":
    from smartpack.services.calibration import CalibrationService
    return CalibrationService(get_anchor_repo(), get_params_repo())
