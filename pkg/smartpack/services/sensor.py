"""SWCNT chemiresistor: cumulative resistance, transient response, bending wear."""

from enum import Enum
from typing import Sequence, Tuple, Union

import numpy as np
import pandas as pd

from smartpack.core.exceptions import InvalidInputError
from smartpack.core.utils import require_non_negative
from smartpack.schemas.params import SensorModel

BEND_REFERENCE_CYCLES = 5000.0


class Gas(str, Enum):
    NH3 = "NH3"
    CH4 = "CH4"
    CO2 = "CO2"


def bend_factor(model: SensorModel) -> float:
    return 1.0 - model.bend_loss_at_5000 * min(model.bend_cycles / BEND_REFERENCE_CYCLES, 1.0)


def effective_nh3_slope(model: SensorModel) -> float:
    return model.nh3_slope * model.passivation_factor * bend_factor(model)


def sensor_resistance(nh3: float, ch4: float, co2: float, model: SensorModel) -> float:
    """Cumulative (non-recovering) resistance in Ohm for a gas mix."""
    require_non_negative(nh3=nh3, ch4=ch4, co2=co2)
    nh3_clamped = min(nh3, model.nh3_linear_max)
    return model.r_baseline * (
        1.0 + effective_nh3_slope(model) * nh3_clamped + model.sens_ch4 * ch4 + model.sens_co2 * co2
    )


def _as_gas(gas: Union[Gas, str]) -> Gas:
    try:
        return Gas(gas.upper() if isinstance(gas, str) else gas)
    except ValueError as exc:
        raise InvalidInputError(f"unknown gas {gas!r}", detail="expected NH3, CH4 or CO2") from exc


def response_percent(gas: Union[Gas, str], conc: float, model: SensorModel) -> float:
    """Single-gas transient response, 100 * (R(c) - R(0)) / R(0)."""
    species = _as_gas(gas)
    require_non_negative(conc=conc)
    if species is Gas.NH3:
        fraction = (
            model.transient_nh3 * model.passivation_factor * bend_factor(model) * min(conc, model.nh3_linear_max)
        )
    elif species is Gas.CH4:
        fraction = model.sens_ch4 * conc
    else:
        fraction = model.sens_co2 * conc
    return 100.0 * fraction


def transient_response_percent(nh3: float, ch4: float, co2: float, model: SensorModel) -> float:
    """Transient response to a mixture; cross terms add linearly."""
    return response_percent(Gas.NH3, nh3, model) + response_percent(Gas.CH4, ch4, model) + response_percent(
        Gas.CO2, co2, model
    )


def degrade_by_bending(model: SensorModel, cycles: float) -> SensorModel:
    """Model after ``cycles`` further bending cycles; baseline unchanged."""
    require_non_negative(cycles=cycles)
    if cycles == 0:
        return model
    return model.model_copy(update={"bend_cycles": model.bend_cycles + cycles})


def exposure_series(
    gas: Union[Gas, str], segments: Sequence[Tuple[float, float]], model: SensorModel, dt_s: float = 1.0
) -> pd.DataFrame:
    """Resistance over a step-exposure protocol with recovery between pulses.

    ``segments`` is a list of (concentration ppm, duration s); a zero concentration is
    a purge back to baseline. Returns columns t_s, conc_ppm, r_ohm, response_pct.
    """
    species = _as_gas(gas)
    require_non_negative(dt_s=dt_s)
    if dt_s == 0:
        raise InvalidInputError("dt_s must be > 0")
    conc_parts = []
    for conc, duration in segments:
        require_non_negative(conc=conc, duration=duration)
        conc_parts.append(np.full(int(round(duration / dt_s)), conc, dtype=float))
    conc = np.concatenate(conc_parts) if conc_parts else np.zeros(0)
    response = np.array([response_percent(species, c, model) for c in conc])
    return pd.DataFrame(
        {
            "t_s": np.arange(conc.size, dtype=float) * dt_s,
            "conc_ppm": conc,
            "r_ohm": model.r_baseline * (1.0 + response / 100.0),
            "response_pct": response,
        }
    )
