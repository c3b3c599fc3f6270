"""LCST-gated release of cinnamaldehyde and eugenol with headspace bookkeeping."""

import math
from typing import Tuple

from smartpack.core.exceptions import InvalidInputError
from smartpack.core.utils import require_finite
from smartpack.schemas.params import CompoundParams, ReleaseParams
from smartpack.schemas.state import CompoundState, ReleaseState


def gate_open(mat_temp_c: float, params: ReleaseParams) -> bool:
    """PNIPAM collapsed (open) at or above the LCST."""
    require_finite(mat_temp_c=mat_temp_c)
    return mat_temp_c >= params.lcst_c


def _step_compound(state: CompoundState, is_open: bool, dt: float, params: CompoundParams) -> CompoundState:
    decayed = state.headspace_ppm * math.exp(-params.headspace_loss * dt)
    if not is_open:
        # released_fraction is carried over untouched
        return CompoundState(
            released_fraction=state.released_fraction, headspace_ppm=decayed, total_load=state.total_load
        )
    fraction = 1.0 - (1.0 - state.released_fraction) * math.exp(-params.rate_constant * dt)
    fraction = min(max(fraction, state.released_fraction), 1.0)
    emitted = fraction - state.released_fraction
    return CompoundState(
        released_fraction=fraction,
        headspace_ppm=decayed + params.headspace_yield * emitted,
        total_load=state.total_load,
    )


def step_release(state: ReleaseState, gate: bool, dt: float, params: ReleaseParams) -> ReleaseState:
    """Advance ``dt`` hours. Open gate: d(frac)/dt = k (1 - frac), integrated exactly."""
    require_finite(dt=dt)
    if dt <= 0:
        raise InvalidInputError("dt must be > 0", detail=f"got {dt}")
    return ReleaseState(
        ca=_step_compound(state.ca, gate, dt, params.ca),
        eg=_step_compound(state.eg, gate, dt, params.eg),
        gate_open=gate,
    )


def headspace_concentrations(state: ReleaseState) -> Tuple[float, float]:
    return state.ca.headspace_ppm, state.eg.headspace_ppm


# ── Closed-form profiles for a gate held open from t = 0 ────────────────────

def released_fraction_at(t_h: float, params: CompoundParams) -> float:
    return 1.0 - math.exp(-params.rate_constant * t_h)


def headspace_profile(t_h: float, params: CompoundParams) -> float:
    """Y k (e^-kt - e^-lt) / (l - k); the l = k limit is Y k t e^-kt."""
    k, loss, y = params.rate_constant, params.headspace_loss, params.headspace_yield
    if math.isclose(k, loss, rel_tol=1e-12):
        return y * k * t_h * math.exp(-k * t_h)
    return y * k * (math.exp(-k * t_h) - math.exp(-loss * t_h)) / (loss - k)
