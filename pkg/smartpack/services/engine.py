"""Closed-loop orchestration: spoilage → sensor → rf_link → thermal → release → inhibition.

Fixed-step explicit integration. Each module sees the current step's upstream
outputs and the previous step's inhibitor. The 40 ppm trigger is not a branch on
concentration: the harvester output switches on once the antenna delivers the
40 ppm operating voltage, and that voltage holds the mat above the LCST. A
comparator mode that powers the heater from the NH3 reading instead exists for
ablation runs.
"""

import concurrent.futures
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from smartpack.core.exceptions import ConfigError, InvalidInputError
from smartpack.schemas.params import RfLinkModel, SensorModel, ThermalParams
from smartpack.schemas.scenario import ScenarioConfig
from smartpack.schemas.state import ReleaseState, SpoilageState, ThermalState
from smartpack.schemas.trace import (
    OBSERVABLE_COLUMNS,
    TRACE_COLUMNS,
    ComparisonReport,
    Event,
    EventKind,
    ObservableDelta,
    ShelfLifeExtension,
    SimulationTrace,
    TraceSummary,
)
from smartpack.services import release as release_model
from smartpack.services import rf_link, sensor, spoilage, thermal

logger = logging.getLogger(__name__)

# Tie-break for events sharing a timestamp: cause before effect
_EVENT_ORDER = {
    EventKind.EXTRAPOLATION_WARNING: 0,
    EventKind.NH3_CROSSED_THRESHOLD: 1,
    EventKind.GATE_OPENED: 2,
    EventKind.GATE_CLOSED: 3,
    EventKind.TVBN_LIMIT_EXCEEDED: 4,
}


@dataclass(frozen=True)
class _RunPlan:
    """Per-run constants resolved once from the scenario."""

    sensor: SensorModel
    rf: RfLinkModel
    thermal: ThermalParams
    delta_f_env: float
    coupling: float
    quality: float


def validate_config(config: ScenarioConfig) -> None:
    """Cross-field checks pydantic cannot express per field."""
    tau = config.device.thermal.time_constant
    if config.dt_s > tau:
        raise ConfigError(f"dt_s={config.dt_s} exceeds device.thermal.time_constant={tau}", field_path="dt_s")
    if config.n_steps < 1:
        raise ConfigError("duration shorter than one step", field_path="duration_h")
    try:
        rf_link.resolve_coupling(config.device.rf, config.environment.position)
    except InvalidInputError as exc:
        raise ConfigError(exc.message, field_path="environment.position", detail=exc.detail) from exc


def _plan(config: ScenarioConfig) -> _RunPlan:
    env = config.environment.to_env_condition()
    device = config.device
    return _RunPlan(
        sensor=sensor.degrade_by_bending(device.sensor, env.bend_cycles),
        rf=device.rf,
        thermal=device.thermal.model_copy(
            update={"series_electrode_resistance": rf_link.electrode_resistance(env.strain)}
        ),
        delta_f_env=rf_link.environmental_shift(device.rf, env).delta_f,
        coupling=rf_link.resolve_coupling(device.rf, env.position).coupling,
        quality=rf_link.quality_derating(device.rf, env.strain),
    )


def _read_chain(plan: _RunPlan, nh3: float, ch4: float, co2: float) -> Tuple[float, float, float, float]:
    """Sensor and antenna readout: (R, f_res, gain, harvested V)."""
    r = sensor.sensor_resistance(nh3, ch4, co2, plan.sensor)
    f_res = rf_link.loaded_frequency(plan.rf, r, plan.delta_f_env)
    gain = rf_link.gain_at_frequency(plan.rf, f_res)
    v = rf_link.voltage_at_frequency(plan.rf, f_res, plan.coupling, plan.quality)
    return r, f_res, gain, v


def _heater_voltage(config: ScenarioConfig, plan: _RunPlan, v_harvest: float, nh3: float) -> float:
    if not config.smart_packaging_enabled:
        return 0.0
    if config.trigger_mode == "comparator":
        return v_harvest if nh3 >= config.trigger_threshold_ppm else 0.0
    return rf_link.delivered_voltage(plan.rf, v_harvest)


def idle_heater_voltage(config: ScenarioConfig) -> float:
    """Heater voltage with no NH3 in the headspace, background gases included."""
    plan = _plan(config)
    env = config.environment
    _, _, _, v = _read_chain(plan, 0.0, env.ch4_ppm, env.co2_ppm)
    return _heater_voltage(config, plan, v, 0.0)


def simulate(config: ScenarioConfig) -> SimulationTrace:
    """Run one scenario; identical configs give identical traces."""
    validate_config(config)
    plan = _plan(config)
    env = config.environment
    food = config.food
    release_params = config.device.release
    n = config.n_steps
    dt_s, dt_h = config.dt_s, config.dt_h

    logger.info("simulation start", extra={"scenario": config.name})
    if idle_heater_voltage(config) > 0.0:
        logger.warning(
            "heater powered with no NH3: background gases detune the antenna past the enable level",
            extra={"scenario": config.name},
        )
    cols: Dict[str, np.ndarray] = {c: np.zeros(n + 1) for c in TRACE_COLUMNS}
    cols["gate_open"] = np.zeros(n + 1, dtype=np.int64)

    spoil = SpoilageState.initial(food) if food is not None else SpoilageState(tvbn=0.0)
    mat = ThermalState(mat_temp_c=plan.thermal.ambient_c)
    rel = ReleaseState.initial(release_params)
    inhibitor = 0.0

    for i in range(n + 1):
        if i > 0 and food is not None:
            spoil = spoilage.step_spoilage(spoil, env.ambient_c, inhibitor, dt_h, food)
        r, f_res, gain, v = _read_chain(plan, spoil.nh3, env.ch4_ppm, env.co2_ppm)
        v_heater = _heater_voltage(config, plan, v, spoil.nh3)
        if i > 0:
            mat = thermal.step_thermal(mat, v_heater, dt_s, plan.thermal)
            is_open = config.smart_packaging_enabled and release_model.gate_open(mat.mat_temp_c, release_params)
            rel = release_model.step_release(rel, is_open, dt_h, release_params)
            inhibitor = rel.ca.headspace_ppm + rel.eg.headspace_ppm

        cols["t_s"][i] = i * dt_s
        cols["tvbn_mg100g"][i] = spoil.tvbn
        cols["nh3_ppm"][i] = spoil.nh3
        cols["r_sensor_ohm"][i] = r
        cols["f_res_mhz"][i] = f_res
        cols["gain_db"][i] = gain
        cols["v_harvest_v"][i] = v
        cols["temp_mat_c"][i] = mat.mat_temp_c
        cols["gate_open"][i] = int(rel.gate_open)
        cols["ca_released_frac"][i] = rel.ca.released_fraction
        cols["eg_released_frac"][i] = rel.eg.released_fraction
        cols["ca_headspace_ppm"][i] = rel.ca.headspace_ppm
        cols["eg_headspace_ppm"][i] = rel.eg.headspace_ppm
        cols["butanone_ppm"][i] = spoil.butanone
        cols["methylbutanol_ppm"][i] = spoil.methylbutanol

    trace = SimulationTrace(
        scenario=config.name,
        config_digest=config.digest(),
        frame=pd.DataFrame({c: cols[c] for c in TRACE_COLUMNS}),
    )
    trace.events = detect_events(trace, config)
    logger.info(
        "simulation finished: %d steps, %d events",
        n,
        len(trace.events),
        extra={"scenario": config.name},
    )
    return trace


# ── Event detection ──────────────────────────────────────────────────────────

def _upward_crossings(t_h: np.ndarray, x: np.ndarray, threshold: float) -> List[Tuple[float, int]]:
    """(interpolated time, first index at/above) for each rise through threshold."""
    found: List[Tuple[float, int]] = []
    if x.size == 0:
        return found
    if x[0] >= threshold:
        found.append((float(t_h[0]), 0))
    idx = np.nonzero((x[:-1] < threshold) & (x[1:] >= threshold))[0] + 1
    for i in idx:
        x0, x1 = x[i - 1], x[i]
        frac = (threshold - x0) / (x1 - x0)
        found.append((float(t_h[i - 1] + frac * (t_h[i] - t_h[i - 1])), int(i)))
    return found


def _extrapolation_events(config: ScenarioConfig) -> List[Event]:
    env = config.environment.to_env_condition()
    events = []
    for field_name in rf_link.out_of_range_fields(env, config.device.rf):
        lo, hi = rf_link.ENV_RANGES[field_name]
        events.append(
            Event(
                kind=EventKind.EXTRAPOLATION_WARNING,
                t_h=0.0,
                step=0,
                detail=f"{field_name}={getattr(env, field_name):g} outside characterised range [{lo:g}, {hi:g}]",
            )
        )
    lookup = rf_link.resolve_coupling(config.device.rf, env.position)
    if lookup.fallback:
        events.append(
            Event(
                kind=EventKind.EXTRAPOLATION_WARNING,
                t_h=0.0,
                step=0,
                detail=f"position {lookup.requested} cm not tabulated; nearest entry {lookup.entry.name}",
            )
        )
    return events


def detect_events(trace: SimulationTrace, config: ScenarioConfig) -> List[Event]:
    """Ordered event log derived from the trace; idempotent."""
    frame = trace.frame
    t_h = frame["t_s"].to_numpy(dtype=float) / 3600.0
    events = _extrapolation_events(config)

    for t, step in _upward_crossings(t_h, frame["nh3_ppm"].to_numpy(dtype=float), config.trigger_threshold_ppm):
        events.append(
            Event(
                kind=EventKind.NH3_CROSSED_THRESHOLD,
                t_h=t,
                step=step,
                detail=f"nh3 >= {config.trigger_threshold_ppm:g} ppm",
            )
        )
    for t, step in _upward_crossings(t_h, frame["tvbn_mg100g"].to_numpy(dtype=float), config.tvbn_limit):
        events.append(
            Event(
                kind=EventKind.TVBN_LIMIT_EXCEEDED,
                t_h=t,
                step=step,
                detail=f"tvbn >= {config.tvbn_limit:g} mg/100 g",
            )
        )

    gate = frame["gate_open"].to_numpy(dtype=np.int64)
    if gate.size and gate[0]:
        events.append(Event(kind=EventKind.GATE_OPENED, t_h=float(t_h[0]), step=0, detail="mat at or above LCST"))
    for i in np.nonzero(np.diff(gate))[0] + 1:
        opened = bool(gate[i])
        events.append(
            Event(
                kind=EventKind.GATE_OPENED if opened else EventKind.GATE_CLOSED,
                t_h=float(t_h[i]),
                step=int(i),
                detail=f"temp_mat_c={frame['temp_mat_c'].iat[i]:.4f}",
            )
        )

    events.sort(key=lambda e: (e.t_h, _EVENT_ORDER[e.kind], e.step))
    return events


# ── Comparison ───────────────────────────────────────────────────────────────

def _summarise(trace: SimulationTrace) -> TraceSummary:
    limit = trace.first_event(EventKind.TVBN_LIMIT_EXCEEDED)
    opened = trace.first_event(EventKind.GATE_OPENED)
    last = trace.frame.iloc[-1]
    return TraceSummary(
        scenario=trace.scenario,
        duration_h=trace.duration_h,
        time_to_limit_h=limit.t_h if limit else None,
        limit_reached=limit is not None,
        gate_opened_h=opened.t_h if opened else None,
        final_tvbn=float(last["tvbn_mg100g"]),
        final_ca_released=float(last["ca_released_frac"]),
        final_eg_released=float(last["eg_released_frac"]),
    )


def _shelf_life(summary: TraceSummary, reference: TraceSummary) -> ShelfLifeExtension:
    if reference.time_to_limit_h is None:
        return ShelfLifeExtension(scenario=summary.scenario, reference=reference.scenario)
    if summary.time_to_limit_h is not None:
        return ShelfLifeExtension(
            scenario=summary.scenario,
            reference=reference.scenario,
            extension_h=summary.time_to_limit_h - reference.time_to_limit_h,
        )
    return ShelfLifeExtension(
        scenario=summary.scenario,
        reference=reference.scenario,
        extension_h=summary.duration_h - reference.time_to_limit_h,
        lower_bound=True,
    )


def compare(traces: Sequence[SimulationTrace]) -> ComparisonReport:
    """Deltas and shelf-life of every trace against the first one."""
    if not traces:
        raise InvalidInputError("compare needs at least one trace")
    ref = traces[0]
    ref_t = ref.frame["t_s"].to_numpy()
    for other in traces[1:]:
        if not np.array_equal(ref_t, other.frame["t_s"].to_numpy()):
            raise InvalidInputError(
                "traces do not share a time grid", detail=f"{ref.scenario} vs {other.scenario}"
            )

    summaries = [_summarise(t) for t in traces]
    report = ComparisonReport(reference=ref.scenario, summaries=summaries)
    for other, summary in zip(traces[1:], summaries[1:]):
        for column in OBSERVABLE_COLUMNS:
            diff = other.frame[column].to_numpy(dtype=float) - ref.frame[column].to_numpy(dtype=float)
            report.deltas.append(
                ObservableDelta(
                    scenario=other.scenario,
                    reference=ref.scenario,
                    column=column,
                    final_delta=float(diff[-1]),
                    max_abs_delta=float(np.max(np.abs(diff))),
                )
            )
        report.shelf_life.append(_shelf_life(summary, summaries[0]))
    return report


def run_many(configs: Sequence[ScenarioConfig], workers: int = 1) -> List[SimulationTrace]:
    """Simulate several scenarios, in a process pool when workers > 1. Order is preserved."""
    if workers <= 1 or len(configs) <= 1:
        return [simulate(c) for c in configs]
    results: List[Optional[SimulationTrace]] = [None] * len(configs)
    with concurrent.futures.ProcessPoolExecutor(max_workers=min(workers, len(configs))) as executor:
        futures = {executor.submit(simulate, c): i for i, c in enumerate(configs)}
        for future in concurrent.futures.as_completed(futures):
            results[futures[future]] = future.result()
    return [r for r in results if r is not None]
