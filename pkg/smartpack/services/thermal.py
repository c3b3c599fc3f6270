"""Joule-heated mat: steady-state power law and first-order relaxation."""

import math

from smartpack.core.exceptions import InvalidInputError
from smartpack.core.utils import require_finite, require_non_negative
from smartpack.schemas.params import ThermalParams
from smartpack.schemas.state import ThermalState


def effective_coefficient(params: ThermalParams) -> float:
    """power_coefficient derated for electrode resistance and scaled for mat area.

    The coefficient is characterised with the reference electrode resistance in
    series; a larger series resistance takes a share of the delivered power.
    """
    derating = (
        (params.heater_resistance + params.reference_electrode_resistance)
        / (params.heater_resistance + params.series_electrode_resistance)
    ) ** params.power_exponent
    area_scale = params.reference_area_cm2 / params.mat_area_cm2
    return params.power_coefficient * derating * area_scale


def steady_state_temp(v: float, params: ThermalParams) -> float:
    """T_ss = ambient + a * v^b."""
    require_non_negative(v=v)
    if v == 0:
        return params.ambient_c
    return params.ambient_c + effective_coefficient(params) * v**params.power_exponent


def step_thermal(state: ThermalState, v: float, dt: float, params: ThermalParams) -> ThermalState:
    """Explicit Euler relaxation towards T_ss over ``dt`` seconds (dt <= time_constant)."""
    require_finite(dt=dt)
    if dt <= 0:
        raise InvalidInputError("dt must be > 0", detail=f"got {dt}")
    if dt > params.time_constant:
        raise InvalidInputError("dt must not exceed the thermal time constant", detail=f"{dt} > {params.time_constant}")
    target = steady_state_temp(v, params)
    return ThermalState(mat_temp_c=state.mat_temp_c + dt / params.time_constant * (target - state.mat_temp_c))


def required_voltage(target_c: float, params: ThermalParams) -> float:
    """Smallest voltage whose steady state reaches ``target_c``."""
    require_finite(target_c=target_c)
    rise = target_c - params.ambient_c
    if rise <= 0:
        return 0.0
    return (rise / effective_coefficient(params)) ** (1.0 / params.power_exponent)


def heating_power(v: float, params: ThermalParams) -> float:
    """Power dissipated in the heater (W) with the electrodes in series."""
    require_non_negative(v=v)
    total = params.heater_resistance + params.series_electrode_resistance
    return v * v * params.heater_resistance / (total * total)


def relaxation_temp(t_s: float, start_c: float, v: float, params: ThermalParams) -> float:
    """Analytic continuous-time solution from ``start_c`` under constant ``v``."""
    target = steady_state_temp(v, params)
    return target + (start_c - target) * math.exp(-t_s / params.time_constant)
