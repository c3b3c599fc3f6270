"""Tests for smartpack.repositories: locking writer, anchors, params, scenarios, traces."""

import json
import os

import pandas as pd
import pytest

from smartpack.core.config import PROJECT_ROOT, get_settings
from smartpack.core.exceptions import ConfigError, DataError, StorageError
from smartpack.repositories.anchor_repo import AnchorRepo
from smartpack.repositories.base import FileRepository
from smartpack.repositories.params_repo import ParamsRepo
from smartpack.repositories.scenario_repo import ScenarioRepo
from smartpack.repositories.trace_repo import TraceRepo
from smartpack.schemas.calibration import FitResult
from smartpack.schemas.params import ModelParams
from smartpack.schemas.trace import TRACE_COLUMNS
from smartpack.services import engine


@pytest.fixture()
def repo():
    return FileRepository(get_settings())


@pytest.fixture()
def short_trace(make_config):
    return engine.simulate(make_config(name="short", duration_h=0.5, environment={"position": 8.0}))


class TestExclusiveWriter:

    def test_writes_and_releases_lock(self, repo, tmp_path):
        target = tmp_path / "out" / "file.txt"
        with repo._exclusive(target) as fh:
            fh.write("hello\n")
        assert target.read_text() == "hello\n"
        assert not (tmp_path / "out" / "file.txt.lock").exists()

    def test_failure_leaves_target_untouched(self, repo, tmp_path):
        target = tmp_path / "file.txt"
        target.write_text("old")
        with pytest.raises(RuntimeError):
            with repo._exclusive(target) as fh:
                fh.write("partial")
                raise RuntimeError("boom")
        assert target.read_text() == "old"
        assert [p.name for p in tmp_path.iterdir()] == ["file.txt"]

    def test_live_lock_refused(self, repo, tmp_path):
        target = tmp_path / "file.txt"
        (tmp_path / "file.txt.lock").write_text(str(os.getpid()))
        with pytest.raises(StorageError):
            with repo._exclusive(target) as fh:
                fh.write("x")

    def test_stale_lock_removed(self, repo, tmp_path):
        target = tmp_path / "file.txt"
        (tmp_path / "file.txt.lock").write_text("999999999")
        with repo._exclusive(target) as fh:
            fh.write("x")
        assert target.read_text() == "x"

    def test_missing_file(self, repo, tmp_path):
        with pytest.raises(StorageError):
            repo._read_text(tmp_path / "nope.txt")


class TestAnchorRepo:

    def test_bundled_anchors(self, anchors):
        assert len(anchors) == 38
        assert "thermal" in anchors.model_ids
        assert set(anchors.tables()) == {
            "coupling", "strain_freq", "strain_trace_resistance", "bend_freq", "temp_freq", "humidity_freq"
        }
        assert all(a.provenance for a in anchors)

    def test_hinge_kind_parsed(self, anchors):
        (inhibition,) = anchors.for_model("inhibition").anchors
        assert inhibition.kind == "upper"
        assert inhibition.inputs["tvbn_cap"] == 40

    def test_missing_column(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text("model_id,observed,tolerance,provenance\nthermal,27,1,x\n")
        with pytest.raises(DataError):
            AnchorRepo(get_settings()).load(path)

    def test_bad_json(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text('model_id,input_json,observed,tolerance,provenance\nthermal,"{v: 3}",27,1,x\n')
        with pytest.raises(DataError) as exc:
            AnchorRepo(get_settings()).load(path)
        assert "line 2" in exc.value.message

    def test_non_positive_tolerance(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text('model_id,input_json,observed,tolerance,provenance\nthermal,"{""v"": 3}",27,0,x\n')
        with pytest.raises(DataError):
            AnchorRepo(get_settings()).load(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(StorageError):
            AnchorRepo(get_settings()).load(tmp_path / "none.csv")


class TestParamsRepo:

    def test_bundled_file_matches_defaults(self):
        loaded = ParamsRepo(get_settings()).load(PROJECT_ROOT / "calibration" / "params.json")
        assert loaded == ModelParams()

    def test_defaults_when_missing(self):
        assert ParamsRepo(get_settings()).load_or_default() == ModelParams()

    def test_env_override(self, tmp_path, monkeypatch):
        path = tmp_path / "custom.json"
        custom = ModelParams().model_copy(update={"thermal": ModelParams().thermal.model_copy(
            update={"time_constant": 30.0})})
        ParamsRepo(get_settings()).save(custom, tmp_path)
        (tmp_path / "params.json").rename(path)
        monkeypatch.setenv("SMARTPACK_PARAMS", str(path))
        get_settings.cache_clear()
        assert ParamsRepo(get_settings()).load_or_default().thermal.time_constant == 30.0

    def test_round_trip_sorted(self, tmp_path):
        path = ParamsRepo(get_settings()).save(ModelParams(), tmp_path)
        data = json.loads(path.read_text())
        assert list(data) == sorted(data)
        assert ParamsRepo(get_settings()).load(path) == ModelParams()

    def test_fits_report_nine_digits(self, tmp_path):
        result = FitResult(
            model_id="release_ca",
            param_names=["release.ca.rate_constant"],
            vector=[1.0 / 3.0],
            residual=0.0,
            iterations=4,
            converged=True,
        )
        ParamsRepo(get_settings()).save_residuals([result], tmp_path)
        fits = pd.read_csv(tmp_path / "fits.csv")
        assert fits["parameters"].iloc[0] == "release.ca.rate_constant=0.333333333"

    def test_invalid_file(self, tmp_path):
        path = tmp_path / "params.json"
        path.write_text('{"thermal": {"time_constant": -5}}')
        with pytest.raises(DataError) as exc:
            ParamsRepo(get_settings()).load(path)
        assert "thermal.time_constant" in exc.value.message


class TestScenarioRepo:

    @pytest.fixture()
    def scenarios(self):
        return ScenarioRepo(get_settings(), ModelParams())

    def test_bundled_file(self, scenarios, scenario_path):
        config = scenarios.load(scenario_path("cold_salmon_smart"))
        assert config.environment.ambient_c == 4.0
        assert config.food.tvbn_cap == 40.0
        assert config.food.q10 == ModelParams().spoilage.q10
        assert config.dt_s == 60.0

    def test_path_without_suffix(self, scenarios, scenario_path):
        config = scenarios.load(scenario_path("rt_salmon_smart").with_suffix(""))
        assert config.name == "rt_salmon_smart"

    def test_bare_name_from_scenarios_dir(self, scenarios, tmp_path):
        (tmp_path / "scenarios").mkdir()
        (tmp_path / "scenarios" / "mine.json").write_text('{"name": "mine", "duration_h": 2}')
        assert scenarios.load("mine").duration_h == 2.0

    def test_empty_box(self, scenarios, scenario_path):
        assert scenarios.load(scenario_path("empty_box")).food is None

    def test_unknown_key(self, scenarios, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"name": "bad", "duration_h": 1, "device": {"thermal": {"tau": 5}}}')
        with pytest.raises(ConfigError) as exc:
            scenarios.load(path)
        assert exc.value.field_path == "device.thermal.tau"

    def test_invalid_json(self, scenarios, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"name": ')
        with pytest.raises(DataError):
            scenarios.load(path)

    def test_not_an_object(self, scenarios, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigError):
            scenarios.load(path)

    def test_missing(self, scenarios, tmp_path):
        with pytest.raises(StorageError):
            scenarios.load(tmp_path / "absent.json")


class TestTraceRepo:

    def test_header_and_columns(self, short_trace, tmp_path):
        trace_path, events_path = TraceRepo(get_settings()).save_trace(short_trace, tmp_path)
        lines = trace_path.read_text().split("\n")
        assert lines[0] == "# scenario=short"
        assert lines[1] == f"# config_digest={short_trace.config_digest}"
        assert lines[2] == ",".join(TRACE_COLUMNS)
        assert "\r" not in trace_path.read_text()
        assert events_path.read_text().split("\n")[2] == "t_h,step,kind,detail"

    def test_byte_identical(self, short_trace, tmp_path):
        repo = TraceRepo(get_settings())
        first, _ = repo.save_trace(short_trace, tmp_path / "a")
        second, _ = repo.save_trace(short_trace, tmp_path / "b")
        assert first.read_bytes() == second.read_bytes()

    def test_nine_significant_digits(self, short_trace, tmp_path):
        trace_path, _ = TraceRepo(get_settings()).save_trace(short_trace, tmp_path)
        row = trace_path.read_text().split("\n")[4].split(",")
        mantissa = row[TRACE_COLUMNS.index("temp_mat_c")].replace(".", "").lstrip("0")
        assert len(mantissa) <= 9

    def test_load_round_trip(self, short_trace, tmp_path):
        repo = TraceRepo(get_settings())
        trace_path, _ = repo.save_trace(short_trace, tmp_path)
        loaded = repo.load_trace(trace_path)
        assert loaded.scenario == "short"
        assert loaded.config_digest == short_trace.config_digest
        pd.testing.assert_frame_equal(loaded.frame, short_trace.frame, check_dtype=False, rtol=1e-8)
        assert [e.kind for e in loaded.events] == [e.kind for e in short_trace.events]
        assert loaded.events[0].detail == short_trace.events[0].detail

    def test_load_rejects_other_csv(self, tmp_path):
        path = tmp_path / "trace.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(DataError):
            TraceRepo(get_settings()).load_trace(path)

    def test_comparison_files(self, short_trace, tmp_path):
        report = engine.compare([short_trace, short_trace])
        comparison, shelf = TraceRepo(get_settings()).save_comparison(report, tmp_path)
        frame = pd.read_csv(comparison, comment="#")
        assert len(frame) == len(TRACE_COLUMNS) - 1
        assert (frame["final_delta"] == 0.0).all()
        payload = json.loads(shelf.read_text())
        assert payload["reference"] == "short"
        assert payload["shelf_life"][0]["extension_h"] is None
