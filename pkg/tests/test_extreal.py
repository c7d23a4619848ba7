import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nlpersp import extreal as er

ext_values = st.one_of(st.floats(allow_nan=False, allow_infinity=False, width=64),
                       st.sampled_from([math.inf, -math.inf]))
finite = st.floats(min_value=-1e100, max_value=1e100, allow_nan=False)
positive = st.floats(min_value=1e-100, max_value=1e100)


class TestAdd:
    def test_absorbing_infinity(self):
        assert er.add(2.0, math.inf) == math.inf

    def test_finite_sum(self):
        assert er.add(1.0, 2.0) == 3.0

    @pytest.mark.parametrize("a, b", [(math.inf, -math.inf), (-math.inf, math.inf)])
    def test_indeterminate(self, a, b):
        with pytest.raises(er.IndeterminateForm):
            er.add(a, b)

    def test_array_indeterminate(self):
        with pytest.raises(er.IndeterminateForm):
            er.add_array([1.0, math.inf], [0.0, -math.inf])

    def test_nan_rejected(self):
        with pytest.raises(er.NaNValue):
            er.add(float("nan"), 1.0)
        with pytest.raises(er.NaNValue):
            er.ext_array([0.0, np.nan])

    @given(ext_values, ext_values, ext_values)
    def test_order_compatible_with_addition(self, a, b, c):
        lo, hi = min(a, b), max(a, b)
        try:
            left, right = er.add(lo, c), er.add(hi, c)
        except er.IndeterminateForm:
            return
        assert left <= right


class TestScale:
    def test_examples(self):
        assert er.scale(0.5, math.inf) == math.inf
        assert er.scale(2.0, 3.0) == 6.0

    @pytest.mark.parametrize("c", [0.0, -1.0, math.inf])
    def test_bad_factor(self, c):
        with pytest.raises(er.ScaleNotPositive):
            er.scale(c, 3.0)

    def test_array_bad_factor(self):
        with pytest.raises(er.ScaleNotPositive):
            er.scale_array([1.0, 0.0], [1.0, 1.0])

    @given(positive, ext_values, ext_values)
    def test_monotone(self, c, a, b):
        lo, hi = min(a, b), max(a, b)
        assert er.scale(c, lo) <= er.scale(c, hi)


class TestRendering:
    def test_render(self):
        assert er.render(math.inf) == "+inf"
        assert er.render(-math.inf) == "-inf"
        assert er.render(0.25) == "0.25"

    def test_parse_unicode_minus(self):
        assert er.parse("−inf") == -math.inf

    @given(ext_values)
    def test_round_trip(self, a):
        assert er.parse(er.render(a)) == a
        assert er.from_json_value(er.to_json_value(a)) == a

    def test_json_values(self):
        assert er.to_json_value(math.inf) == "+inf"
        assert er.to_json_value(1.5) == 1.5
