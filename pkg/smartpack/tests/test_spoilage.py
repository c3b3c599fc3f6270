"""Tests for smartpack.services.spoilage: logistic TVB-N, NH3 map, markers."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smartpack.core.exceptions import InvalidInputError
from smartpack.schemas.params import SpoilageParams
from smartpack.schemas.state import SpoilageState
from smartpack.services import spoilage


def integrate(params, t_h, temp_c, dt_h=10.0 / 3600.0, inhibitor=0.0):
    state = SpoilageState.initial(params)
    for _ in range(int(round(t_h / dt_h))):
        state = spoilage.step_spoilage(state, temp_c, inhibitor, dt_h, params)
    return state


class TestSpoilageRate:

    def test_fresh_rate_positive(self, params):
        state = SpoilageState.initial(params.spoilage)
        assert spoilage.spoilage_rate(state, 20.0, 0.0, params.spoilage) > 0

    def test_rate_zero_at_cap(self, params):
        state = SpoilageState(tvbn=params.spoilage.tvbn_cap)
        assert spoilage.spoilage_rate(state, 20.0, 0.0, params.spoilage) == 0.0

    def test_temperature_slows_growth(self, params):
        state = SpoilageState(tvbn=5.0)
        warm = spoilage.spoilage_rate(state, 20.0, 0.0, params.spoilage)
        cold = spoilage.spoilage_rate(state, 4.0, 0.0, params.spoilage)
        assert cold < warm

    def test_q10_factor_over_ten_degrees(self, params):
        assert spoilage.temperature_factor(30.0, params.spoilage) == pytest.approx(params.spoilage.q10)
        assert spoilage.temperature_factor(20.0, params.spoilage) == 1.0

    def test_inhibitor_at_halfdose_halves_rate(self, params):
        state = SpoilageState(tvbn=5.0)
        free = spoilage.spoilage_rate(state, 20.0, 0.0, params.spoilage)
        half = spoilage.spoilage_rate(state, 20.0, params.spoilage.inhibition_halfdose, params.spoilage)
        assert half == pytest.approx(free / 2.0)

    @pytest.mark.parametrize("temp_c", [-5.1, 40.5, float("nan")])
    def test_temperature_outside_range_rejected(self, params, temp_c):
        with pytest.raises(InvalidInputError):
            spoilage.spoilage_rate(SpoilageState(tvbn=2.0), temp_c, 0.0, params.spoilage)

    def test_negative_inhibitor_rejected(self, params):
        with pytest.raises(InvalidInputError):
            spoilage.spoilage_rate(SpoilageState(tvbn=2.0), 20.0, -1.0, params.spoilage)

    def test_zero_tvbn_never_grows(self, params):
        food = params.spoilage.model_copy(update={"tvbn_initial": 0.0})
        state = integrate(food, 5.0, 20.0, dt_h=0.1)
        assert state.tvbn == 0.0
        assert state.nh3 == 0.0


class TestNh3Map:

    def test_zero_at_fresh_level(self, params):
        assert spoilage.nh3_from_tvbn(params.spoilage.tvbn_initial, params.spoilage) == 0.0

    def test_zero_below_fresh_level(self, params):
        assert spoilage.nh3_from_tvbn(0.5, params.spoilage) == 0.0

    def test_sixty_ppm_at_limit(self, params):
        assert spoilage.nh3_from_tvbn(25.0, params.spoilage) == pytest.approx(60.0, rel=1e-6)

    def test_non_finite_rejected(self, params):
        with pytest.raises(InvalidInputError):
            spoilage.nh3_from_tvbn(float("inf"), params.spoilage)


class TestStepSpoilage:

    def test_room_temperature_reaches_limit_at_16h(self, params):
        t = spoilage.time_to_tvbn(25.0, 20.0, params.spoilage)
        assert t == pytest.approx(16.0, abs=1.0)

    def test_euler_tracks_closed_form(self, params):
        state = integrate(params.spoilage, 9.0, 20.0)
        assert state.tvbn == pytest.approx(spoilage.tvbn_at(9.0, 20.0, params.spoilage), rel=5e-3)

    def test_cold_batch_four_days(self, params):
        cold = params.spoilage.model_copy(update={"tvbn_cap": 40.0})
        assert spoilage.tvbn_at(96.0, 4.0, cold) == pytest.approx(32.0, abs=0.8)

    def test_step_halving_error_is_second_order(self, params):
        def gap(dt):
            state = SpoilageState(tvbn=5.0)
            one = spoilage.step_spoilage(state, 20.0, 0.0, dt, params.spoilage)
            half = spoilage.step_spoilage(state, 20.0, 0.0, dt / 2.0, params.spoilage)
            two = spoilage.step_spoilage(half, 20.0, 0.0, dt / 2.0, params.spoilage)
            return abs(one.tvbn - two.tvbn)

        c = gap(0.4) / 0.4 ** 2
        for dt in (0.2, 0.1, 0.05, 0.025):
            assert 0.5 * c * dt ** 2 <= gap(dt) <= 1.1 * c * dt ** 2

    def test_dose_accumulates(self, params):
        state = SpoilageState.initial(params.spoilage)
        nxt = spoilage.step_spoilage(state, 20.0, 2.0, 0.5, params.spoilage)
        assert nxt.cumulative_inhibitor_dose == pytest.approx(1.0)

    def test_rejects_non_positive_dt(self, params):
        with pytest.raises(InvalidInputError):
            spoilage.step_spoilage(SpoilageState.initial(params.spoilage), 20.0, 0.0, 0.0, params.spoilage)

    def test_butanone_peak_at_4h(self, params):
        state = integrate(params.spoilage, 4.0, 20.0)
        assert state.butanone == pytest.approx(660.0, rel=0.05)
        assert state.methylbutanol == pytest.approx(state.butanone * 45.0 / 660.0, rel=1e-6)

    def test_markers_decay_once_growth_stops(self, params):
        state = integrate(params.spoilage, 24.0, 20.0, dt_h=0.01)
        assert state.butanone < 50.0

    @settings(max_examples=50, deadline=None)
    @given(
        tvbn=st.floats(0.0, 25.0),
        temp=st.floats(-5.0, 40.0),
        inhibitor=st.floats(0.0, 500.0),
        dt=st.floats(1e-4, 1.0),
    )
    def test_never_exceeds_cap_and_never_decreases(self, tvbn, temp, inhibitor, dt):
        params = SpoilageParams()
        state = SpoilageState(tvbn=tvbn)
        nxt = spoilage.step_spoilage(state, temp, inhibitor, dt, params)
        assert state.tvbn <= nxt.tvbn <= max(params.tvbn_cap, state.tvbn)
        assert nxt.nh3 >= 0.0
        assert nxt.butanone >= 0.0 and nxt.methylbutanol >= 0.0


class TestClosedForm:

    def test_starts_at_initial(self, params):
        assert spoilage.tvbn_at(0.0, 20.0, params.spoilage) == pytest.approx(params.spoilage.tvbn_initial)

    def test_approaches_cap(self, params):
        assert spoilage.tvbn_at(200.0, 20.0, params.spoilage) == pytest.approx(params.spoilage.tvbn_cap, rel=1e-6)

    def test_time_to_tvbn_inverts_curve(self, params):
        t = spoilage.time_to_tvbn(20.0, 10.0, params.spoilage)
        assert spoilage.tvbn_at(t, 10.0, params.spoilage) == pytest.approx(20.0)

    def test_target_above_cap_never_reached(self, params):
        assert spoilage.time_to_tvbn(30.0, 20.0, params.spoilage) is None

    def test_target_below_initial_is_immediate(self, params):
        assert spoilage.time_to_tvbn(1.0, 20.0, params.spoilage) == 0.0

    def test_cap_must_exceed_initial(self):
        with pytest.raises(ValueError):
            SpoilageParams(tvbn_initial=5.0, tvbn_cap=4.0)

    def test_logistic_midpoint(self, params):
        food = params.spoilage
        mid = food.tvbn_cap / 2.0
        t = spoilage.time_to_tvbn(mid, 20.0, food)
        expected = math.log((food.tvbn_cap - food.tvbn_initial) / food.tvbn_initial) / food.growth_rate_rt
        assert t == pytest.approx(expected)
