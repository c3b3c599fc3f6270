"""NFC antenna loaded by the sensor: resonance, gain and harvested voltage.

Phenomenological model: environmental shifts add in frequency, the sensor pulls
the resonance linearly towards the harvesting peak, and both the reflection-style
gain and the harvested voltage follow a Lorentzian of the reported bandwidth.
Strain raises the trace resistance and scales the harvest down with the Q.
The harvester only drives the heater once its output reaches ``harvest_enable_v``.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

from smartpack.core.exceptions import InvalidInputError
from smartpack.core.utils import interp_table, require_finite
from smartpack.schemas.calibration import Anchor
from smartpack.schemas.params import CouplingEntry, EnvShiftTables, RfLinkModel
from smartpack.schemas.scenario import EnvCondition

logger = logging.getLogger(__name__)

ELECTRODE_TABLE: List[Tuple[float, float]] = [(0.0, 3.0), (40.0, 8.0)]

# Characterised ranges of the antenna measurements
ENV_RANGES: Dict[str, Tuple[float, float]] = {
    "strain": (0.0, 40.0),
    "bend_cycles": (0.0, 5000.0),
    "temp_c": (5.0, 25.0),
    "humidity_rh": (20.0, 80.0),
}


@dataclass(frozen=True)
class EnvShift:
    delta_f: float
    extrapolated: Tuple[str, ...] = ()


@dataclass(frozen=True)
class CouplingLookup:
    entry: CouplingEntry
    requested: Union[str, float]
    fallback: bool = False

    @property
    def coupling(self) -> float:
        return self.entry.coupling


def lorentzian(detuning: float, bandwidth: float) -> float:
    """Normalised resonance shape; 1 at zero detuning, 1/2 at +-bandwidth/2."""
    x = 2.0 * detuning / bandwidth
    return 1.0 / (1.0 + x * x)


# ── Environment ──────────────────────────────────────────────────────────────

def active_env_fields(model: RfLinkModel) -> List[str]:
    """Environment fields that move the resonance of this antenna."""
    if model.encapsulated:
        return ["strain", "bend_cycles"]
    return list(ENV_RANGES)


def out_of_range_fields(env: EnvCondition, model: Optional[RfLinkModel] = None) -> List[str]:
    flagged = []
    names = active_env_fields(model) if model is not None else list(ENV_RANGES)
    for name in names:
        lo, hi = ENV_RANGES[name]
        value = getattr(env, name)
        if value < lo or value > hi:
            flagged.append(name)
    return flagged


def environmental_shift(model: RfLinkModel, env: EnvCondition) -> EnvShift:
    """Additive frequency shift from strain, bending, temperature and humidity.

    Temperature and humidity only act on a bare antenna; the encapsulated
    device holds its resonance.
    """
    tables = model.env_shift_tables
    lookups = [("strain", tables.strain_freq, env.strain), ("bend_cycles", tables.bend_freq, env.bend_cycles)]
    if not model.encapsulated:
        lookups += [("temp_c", tables.temp_freq, env.temp_c), ("humidity_rh", tables.humidity_freq, env.humidity_rh)]
    delta = 0.0
    for _, knots, x in lookups:
        value, _ = interp_table(knots, x)
        delta += value
    return EnvShift(delta_f=delta, extrapolated=tuple(out_of_range_fields(env, model)))


def trace_resistance(model: RfLinkModel, strain: float) -> float:
    """Antenna conductor resistance under strain (Ohm): unstrained value plus the tabulated rise."""
    require_finite(strain=strain)
    rise, _ = interp_table(model.env_shift_tables.strain_trace_resistance, strain)
    return model.trace_resistance + rise


def quality_derating(model: RfLinkModel, strain: float) -> float:
    """Harvest scale from the antenna Q, inverse to its conductor resistance; 1 unstrained."""
    return model.trace_resistance / trace_resistance(model, strain)


def electrode_resistance(strain: float) -> float:
    """Heater supply electrodes, 3 Ohm unstrained to 8 Ohm at 40 %; clamped outside."""
    require_finite(strain=strain)
    value, extrapolated = interp_table(ELECTRODE_TABLE, strain)
    if extrapolated:
        logger.warning("electrode strain %.3g%% outside [0, 40]; clamped", strain)
    return value


# ── Resonance, gain, voltage ────────────────────────────────────────────────

def _check_load(r_load: float) -> None:
    require_finite(r_load=r_load)
    if r_load <= 0:
        raise InvalidInputError("r_load must be > 0", detail=f"got {r_load}")


def loaded_frequency(model: RfLinkModel, r_load: float, delta_f_env: float) -> float:
    """Resonance after environment shift and load pulling, MHz."""
    return model.f_res_nominal + delta_f_env - model.pull_mhz * (r_load - model.r_load_ref) / model.r_load_ref


def resonance_frequency(model: RfLinkModel, r_load: float, env: EnvCondition) -> float:
    _check_load(r_load)
    return loaded_frequency(model, r_load, environmental_shift(model, env).delta_f)


def gain_at_frequency(model: RfLinkModel, f_res: float) -> float:
    """Gain at the carrier; gain_unloaded at the nominal detuning, gain_fullscale at perfect match."""
    ref_detuning = abs(model.f_res_nominal - model.carrier_freq)
    depth_ref = 1.0 - lorentzian(ref_detuning, model.bandwidth)
    depth = 1.0 - lorentzian(abs(f_res - model.carrier_freq), model.bandwidth)
    return model.gain_fullscale + (model.gain_unloaded - model.gain_fullscale) * depth / depth_ref


def gain_db(model: RfLinkModel, r_load: float, env: EnvCondition) -> float:
    return gain_at_frequency(model, resonance_frequency(model, r_load, env))


def match_factor(model: RfLinkModel, f_res: float) -> float:
    return lorentzian(f_res - model.match_freq, model.bandwidth)


def resolve_coupling(model: RfLinkModel, position: Union[str, float]) -> CouplingLookup:
    """Coupling entry for a table name or, for a distance in cm, the nearest entry."""
    if isinstance(position, str):
        for entry in model.coupling_table:
            if entry.name == position:
                return CouplingLookup(entry=entry, requested=position)
        names = ", ".join(e.name for e in model.coupling_table)
        raise InvalidInputError(f"unknown position {position!r}", detail=f"known positions: {names}")
    require_finite(position=position)
    nearest = min(model.coupling_table, key=lambda e: (abs(e.distance_cm - position), e.distance_cm))
    if nearest.distance_cm != position:
        logger.warning("position %.3g cm not tabulated; using nearest entry %s", position, nearest.name)
        return CouplingLookup(entry=nearest, requested=position, fallback=True)
    return CouplingLookup(entry=nearest, requested=position)


def voltage_at_frequency(model: RfLinkModel, f_res: float, coupling: float, quality: float = 1.0) -> float:
    return model.v_peak * coupling * quality * match_factor(model, f_res)


def harvested_voltage(model: RfLinkModel, r_load: float, env: EnvCondition) -> float:
    """Rectified antenna output, V."""
    f_res = resonance_frequency(model, r_load, env)
    coupling = resolve_coupling(model, env.position).coupling
    return voltage_at_frequency(model, f_res, coupling, quality_derating(model, env.strain))


def harvest_enabled(model: RfLinkModel, v_harvest: float) -> bool:
    return v_harvest >= model.harvest_enable_v


def delivered_voltage(model: RfLinkModel, v_harvest: float) -> float:
    """Voltage the harvester passes on to the heater; 0 until the enable level is reached."""
    require_finite(v_harvest=v_harvest)
    return v_harvest if harvest_enabled(model, v_harvest) else 0.0


def best_position(model: RfLinkModel) -> CouplingEntry:
    """Highest-coupling entry; ties go to the nearer one."""
    return max(model.coupling_table, key=lambda e: (e.coupling, -e.distance_cm))


# ── Re-digitised tables from the anchors file ───────────────────────────────

_SHIFT_TABLE_NAMES = set(EnvShiftTables.model_fields)


def apply_tables(model: RfLinkModel, tables: Dict[str, Sequence[Anchor]]) -> RfLinkModel:
    """Replace coupling and shift tables with rows from an anchor set.

    ``table.coupling`` rows carry {"name", "distance_cm"} inputs and the coupling as
    observed value; ``table.<shift name>`` rows carry {"x"} and the table value.
    """
    update: Dict[str, object] = {}
    if "coupling" in tables:
        update["coupling_table"] = [
            CouplingEntry(name=a.inputs["name"], distance_cm=float(a.inputs["distance_cm"]), coupling=a.observed)
            for a in tables["coupling"]
        ]
    shifts = {
        name: sorted((float(a.inputs["x"]), a.observed) for a in rows)
        for name, rows in tables.items()
        if name in _SHIFT_TABLE_NAMES
    }
    if shifts:
        current = model.env_shift_tables.model_dump()
        current.update(shifts)
        update["env_shift_tables"] = EnvShiftTables.model_validate(current)
    if not update:
        return model
    return RfLinkModel.model_validate({**model.model_dump(), **update})
