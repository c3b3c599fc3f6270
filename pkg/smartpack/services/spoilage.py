"""TVB-N growth, ammonia mapping and marker VOC dynamics.

The plant the closed loop regulates: logistic TVB-N growth scaled by a Q10
temperature law and divided by (1 + inhibitor/halfdose). Ammonia is a linear
image of TVB-N above the fresh level; 2-butanone and 3-methyl butanol are
diagnostic outputs that never feed back.
"""

import logging
import math
from typing import Optional

from smartpack.core.exceptions import InvalidInputError
from smartpack.core.utils import require_finite, require_non_negative
from smartpack.schemas.params import SpoilageParams
from smartpack.schemas.state import SpoilageState

logger = logging.getLogger(__name__)

REFERENCE_TEMP_C = 20.0
TEMP_RANGE_C = (-5.0, 40.0)


def temperature_factor(temp_c: float, params: SpoilageParams) -> float:
    return params.q10 ** ((temp_c - REFERENCE_TEMP_C) / 10.0)


def spoilage_rate(state: SpoilageState, temp_c: float, inhibitor_ppm: float, params: SpoilageParams) -> float:
    """TVB-N growth rate in mg/100 g per hour."""
    require_finite(tvbn=state.tvbn, temp_c=temp_c, inhibitor_ppm=inhibitor_ppm)
    if not TEMP_RANGE_C[0] <= temp_c <= TEMP_RANGE_C[1]:
        raise InvalidInputError("temp_c outside [-5, 40] C", detail=f"got {temp_c}")
    if inhibitor_ppm < 0:
        raise InvalidInputError("inhibitor_ppm must be >= 0", detail=f"got {inhibitor_ppm}")
    if state.tvbn >= params.tvbn_cap:
        return 0.0
    logistic = params.growth_rate_rt * state.tvbn * (1.0 - state.tvbn / params.tvbn_cap)
    return max(logistic, 0.0) * temperature_factor(temp_c, params) / (1.0 + inhibitor_ppm / params.inhibition_halfdose)


def nh3_from_tvbn(tvbn: float, params: SpoilageParams) -> float:
    """Headspace NH3 in ppm; exactly 0 at or below the fresh TVB-N level."""
    require_finite(tvbn=tvbn)
    return params.nh3_per_tvbn * max(tvbn - params.tvbn_initial, 0.0)


def step_spoilage(
    state: SpoilageState, temp_c: float, inhibitor_ppm: float, dt: float, params: SpoilageParams
) -> SpoilageState:
    """Advance one explicit Euler step of ``dt`` hours."""
    require_finite(dt=dt)
    if dt <= 0:
        raise InvalidInputError("dt must be > 0", detail=f"got {dt}")
    rate = spoilage_rate(state, temp_c, inhibitor_ppm, params)
    tvbn = min(state.tvbn + dt * rate, params.tvbn_cap)

    # production follows the (already inhibited) spoilage rate
    decay = params.marker_decay
    butanone = state.butanone + dt * (params.marker_yield_butanone * rate - decay * state.butanone)
    methylbutanol = state.methylbutanol + dt * (params.marker_yield_methylbutanol * rate - decay * state.methylbutanol)

    return SpoilageState(
        tvbn=tvbn,
        nh3=nh3_from_tvbn(tvbn, params),
        butanone=max(butanone, 0.0),
        methylbutanol=max(methylbutanol, 0.0),
        cumulative_inhibitor_dose=state.cumulative_inhibitor_dose + inhibitor_ppm * dt,
    )


# ── Closed-form helpers (constant temperature, no inhibitor) ────────────────

def tvbn_at(t_h: float, temp_c: float, params: SpoilageParams) -> float:
    """Analytic logistic solution from tvbn_initial."""
    require_non_negative(t_h=t_h)
    require_finite(temp_c=temp_c)
    n0, cap = params.tvbn_initial, params.tvbn_cap
    r = params.growth_rate_rt * temperature_factor(temp_c, params)
    if n0 <= 0:
        return 0.0
    return cap / (1.0 + (cap - n0) / n0 * math.exp(-r * t_h))


def time_to_tvbn(target: float, temp_c: float, params: SpoilageParams) -> Optional[float]:
    """Hours until the analytic curve reaches ``target``; None if it never does."""
    n0, cap = params.tvbn_initial, params.tvbn_cap
    if target <= n0:
        return 0.0
    if target >= cap or n0 <= 0:
        return None
    r = params.growth_rate_rt * temperature_factor(temp_c, params)
    if r == 0:
        return None
    return -math.log((cap / target - 1.0) * n0 / (cap - n0)) / r
