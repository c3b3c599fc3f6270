"""Tests for settings, logging, the error taxonomy and plot column grouping."""

import json
import logging
import sys
from pathlib import Path

import pytest

from smartpack.core.config import PROJECT_ROOT, Settings, get_settings
from smartpack.core.error_handlers import EXIT_IO, EXIT_VALIDATION, exit_code_for
from smartpack.core.exceptions import (
    CalibrationError,
    ConfigError,
    DataError,
    InvalidInputError,
    StorageError,
    UnsupportedError,
)
from smartpack.core.logging_config import JsonFormatter, setup_logging
from smartpack.services.plotting import COLUMN_GROUPS, group_columns
from smartpack.schemas.trace import OBSERVABLE_COLUMNS


class TestSettings:

    def test_paths_follow_base_dir(self, tmp_path):
        settings = get_settings()
        assert settings.base_dir == tmp_path
        assert settings.params_path == tmp_path / "calibration" / "params.json"
        assert settings.anchors_path == tmp_path / "anchors" / "paper_anchors.csv"
        assert settings.scenarios_dir == tmp_path / "scenarios"

    def test_output_dir_created(self, tmp_path):
        assert get_settings().output_dir == tmp_path / "output"
        assert (tmp_path / "output").is_dir()

    def test_env_overrides(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SMARTPACK_PARAMS", str(tmp_path / "mine.json"))
        monkeypatch.setenv("SMARTPACK_WORKERS", "4")
        get_settings.cache_clear()
        settings = get_settings()
        assert settings.params_path == tmp_path / "mine.json"
        assert settings.workers == 4

    def test_workers_validated(self, monkeypatch):
        monkeypatch.setenv("SMARTPACK_WORKERS", "0")
        with pytest.raises(ValueError):
            Settings()

    def test_cached(self):
        assert get_settings() is get_settings()

    def test_project_root_holds_bundled_data(self):
        assert (PROJECT_ROOT / "scenarios").is_dir()
        assert isinstance(PROJECT_ROOT, Path)


class TestJsonFormatter:

    def _record(self, **extra):
        record = logging.LogRecord("smartpack.test", logging.INFO, __file__, 10, "step %d", (3,), None)
        for key, value in extra.items():
            setattr(record, key, value)
        return record

    def test_fields(self):
        entry = json.loads(JsonFormatter().format(self._record()))
        assert entry["level"] == "INFO"
        assert entry["logger"] == "smartpack.test"
        assert entry["message"] == "step 3"

    def test_context_fields(self):
        entry = json.loads(JsonFormatter().format(self._record(scenario="rt", model_id="thermal")))
        assert entry["scenario"] == "rt"
        assert entry["model_id"] == "thermal"
        assert "run_id" not in entry

    def test_exception(self):
        try:
            raise DataError("bad row")
        except DataError:
            record = logging.LogRecord("x", logging.ERROR, __file__, 1, "failed", (), sys.exc_info())
        entry = json.loads(JsonFormatter().format(record))
        assert entry["exception"] == {"type": "DataError", "message": "bad row"}

    def test_setup_replaces_handlers(self):
        setup_logging("DEBUG", json_format=True)
        setup_logging("WARNING", json_format=False)
        root = logging.getLogger()
        assert len(root.handlers) == 1
        assert root.level == logging.WARNING
        assert not isinstance(root.handlers[0].formatter, JsonFormatter)


class TestExitCodes:

    @pytest.mark.parametrize(
        "exc",
        [
            InvalidInputError("x"),
            ConfigError("x", field_path="dt_s"),
            DataError("x"),
            UnsupportedError("x"),
            CalibrationError("x"),
        ],
    )
    def test_validation_errors(self, exc):
        assert exit_code_for(exc) == EXIT_VALIDATION

    def test_storage_error(self):
        assert exit_code_for(StorageError("locked")) == EXIT_IO

    def test_os_error(self):
        assert exit_code_for(PermissionError("denied")) == EXIT_IO

    def test_other_exceptions_propagate(self):
        with pytest.raises(KeyError):
            exit_code_for(KeyError("boom"))

    def test_config_error_message_carries_path(self):
        exc = ConfigError("must be > 0", field_path="device.thermal.time_constant")
        assert exc.message == "device.thermal.time_constant: must be > 0"
        assert exc.field_path == "device.thermal.time_constant"


class TestGroupColumns:

    def test_groups_cover_every_observable(self):
        grouped = [c for members in COLUMN_GROUPS.values() for c in members]
        assert sorted(grouped) == sorted(OBSERVABLE_COLUMNS)

    def test_group_order(self):
        assert group_columns(["butanone_ppm", "nh3_ppm", "temp_mat_c"]) == [
            ["nh3_ppm"],
            ["temp_mat_c"],
            ["butanone_ppm"],
        ]

    def test_unknown_column(self):
        with pytest.raises(InvalidInputError, match="colour"):
            group_columns(["nh3_ppm", "colour"])
