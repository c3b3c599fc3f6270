"""Tests for smartpack.core.utils."""

import math

import pytest

from smartpack.core.exceptions import InvalidInputError
from smartpack.core.utils import (
    config_digest,
    deep_merge,
    format_number,
    interp_table,
    require_finite,
    require_non_negative,
)

KNOTS = [(0.0, 0.0), (10.0, 5.0), (20.0, 5.0)]


class TestInterpTable:

    def test_inside(self):
        assert interp_table(KNOTS, 5.0) == (2.5, False)

    def test_on_knot(self):
        assert interp_table(KNOTS, 10.0) == (5.0, False)

    def test_clamped_below(self):
        assert interp_table(KNOTS, -3.0) == (0.0, True)

    def test_clamped_above(self):
        assert interp_table(KNOTS, 99.0) == (5.0, True)


class TestGuards:

    def test_finite_passes(self):
        require_finite(a=1.0, b=-2.0)

    @pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf, None])
    def test_non_finite_named(self, bad):
        with pytest.raises(InvalidInputError, match="dt must be finite"):
            require_finite(dt=bad)

    def test_negative_rejected(self):
        with pytest.raises(InvalidInputError, match="v must be >= 0"):
            require_non_negative(v=-0.1)

    def test_zero_accepted(self):
        require_non_negative(v=0.0)


class TestDeepMerge:

    def test_nested_override(self):
        base = {"device": {"thermal": {"time_constant": 60, "ambient_c": 20}}, "name": "a"}
        merged = deep_merge(base, {"device": {"thermal": {"time_constant": 30}}})
        assert merged["device"]["thermal"] == {"time_constant": 30, "ambient_c": 20}
        assert merged["name"] == "a"

    def test_base_untouched(self):
        base = {"a": {"b": 1}}
        deep_merge(base, {"a": {"b": 2}})
        assert base == {"a": {"b": 1}}

    def test_lists_replace(self):
        assert deep_merge({"x": [1, 2]}, {"x": [3]}) == {"x": [3]}

    def test_none_replaces_mapping(self):
        assert deep_merge({"food": {"q10": 2}}, {"food": None}) == {"food": None}


class TestDigest:

    def test_key_order_irrelevant(self):
        assert config_digest({"a": 1, "b": 2}) == config_digest({"b": 2, "a": 1})

    def test_value_sensitive(self):
        assert config_digest({"a": 1}) != config_digest({"a": 2})

    def test_hex_sha256(self):
        assert len(config_digest({})) == 64


class TestFormatNumber:

    def test_nine_significant_digits(self):
        assert format_number(1.0 / 3.0) == "0.333333333"

    def test_integer_valued(self):
        assert format_number(40.0) == "40"
