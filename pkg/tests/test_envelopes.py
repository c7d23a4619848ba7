import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlpersp import berhu, envelope_down, envelope_up, huber, max_decomposition_check
from nlpersp.envelopes import _UpClosedForm, restrict_down, restrict_up
from nlpersp.errors import (EmptyNegativeSet, EmptyPositiveSet, GridRequired, HypothesisViolated,
                            ParameterOutOfRange)
from nlpersp.funcs import ClippedQuadraticScaling, GridSpec, NormPowerShifted
from nlpersp.funcs.core import Meta, Opaque
from nlpersp.sets import HalfSpace

G0 = Meta(convex=True, lsc=True, proper=True)


def opaque(fn, dim=1, meta=None):
    return Opaque(fn, dim, meta or Meta())


SQ_MINUS_ONE = opaque(lambda p: p[:, 0] ** 2 - 1)


class TestRestrictions:
    def test_down(self):
        f = restrict_down(SQ_MINUS_ONE)
        assert f(0.0) == -1.0 and f(2.0) == math.inf and f(1.0) == math.inf
        assert restrict_down(opaque(lambda p: np.full(len(p), np.inf)))(0.0) == math.inf

    def test_up(self):
        f = restrict_up(SQ_MINUS_ONE)
        assert f(2.0) == 3.0 and f(0.0) == math.inf
        assert restrict_up(opaque(lambda p: np.zeros(len(p))))(1.0) == math.inf


class TestEnvelopeDown:
    def test_shifted_square(self):
        r = envelope_down(NormPowerShifted(2.0, shift=-0.5))
        assert r.route == "ClosedFormGamma0"
        np.testing.assert_allclose(r.handle([0.0, 0.5, 1.0, -1.0]), [-0.5, -0.375, 0.0, 0.0])
        assert r.handle(1.01) == math.inf

    def test_never_negative(self):
        with pytest.raises(EmptyNegativeSet):
            envelope_down(NormPowerShifted(2.0))

    def test_abs_minus_one_against_oracle(self):
        grid = GridSpec((-3.0,), (3.0,), (121,))
        closed = envelope_down(opaque(lambda p: np.abs(p[:, 0]) - 1, meta=G0), grid)
        oracle = envelope_down(opaque(lambda p: np.abs(p[:, 0]) - 1), grid)
        assert closed.route == "ClosedFormGamma0" and oracle.route == "OracleBiconjugate"
        x = np.linspace(-0.95, 0.95, 39)
        np.testing.assert_allclose(closed.handle(x), np.abs(x) - 1, atol=1e-15)
        np.testing.assert_allclose(oracle.handle(x), np.abs(x) - 1, atol=1e-12)
        assert closed.handle(1.5) == math.inf

    def test_grid_required(self):
        with pytest.raises(GridRequired):
            envelope_down(opaque(lambda p: p[:, 0] - 1))
        with pytest.raises(GridRequired):
            envelope_down(opaque(lambda p: p[:, 0] - 1, meta=G0))


class TestEnvelopeUp:
    def test_shifted_square(self):
        r = envelope_up(NormPowerShifted(2.0, shift=-0.5))
        np.testing.assert_allclose(r.handle([0.0, 1.0, 2.0, -3.0]), [0.0, 0.0, 1.5, 4.0])

    def test_positive_function_unchanged(self):
        f = NormPowerShifted(2.0, mult=2.0, shift=1.0)  # 1 + x^2
        x = np.linspace(-3, 3, 13)
        np.testing.assert_allclose(envelope_up(f).handle(x), f(x))

    def test_clipped_quadratic_plateau(self):
        r = envelope_up(ClippedQuadraticScaling(0.5))
        y = np.array([-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0])
        np.testing.assert_allclose(r.handle(y), [math.inf, 0.375, 0.0, 0.0, 0.0, 0.375, 1.375])

    def test_never_positive(self):
        with pytest.raises(EmptyPositiveSet):
            envelope_up(NormPowerShifted(2.0, shift=-1.0, dim=1).__class__(2.0, mult=0.0, shift=-1.0))
        with pytest.raises(EmptyPositiveSet):
            envelope_up(opaque(lambda p: -np.ones(len(p))), GridSpec((-1.0,), (1.0,), (5,)))

    def test_concave_positive_part(self):
        # -f = x^2 - 1 has an affine minorant, so dom f▲ is the closed hull of F = ]-1, 1[;
        # on the grid the finite nodes of f∧ reach |x| = 0.95
        grid = GridSpec((-2.0,), (2.0,), (81,))
        r = envelope_up(opaque(lambda p: 1 - p[:, 0] ** 2), grid)
        x = grid.axes()[0]
        v = r.handle(x)
        fin = np.isfinite(v)
        np.testing.assert_array_equal(fin, np.abs(x) < 1 - 1e-12)
        # the hull of a concave profile is the chord through the outermost nodes,
        # up to the dual spacing times the primal radius
        chord = 1 - 0.95 ** 2
        dxi = r.extra["dual"].spacing[0]
        assert np.all(v[fin] <= chord + 1e-12)
        assert np.all(v[fin] >= chord - 0.95 * dxi)

    def test_oracle_grid_required(self):
        with pytest.raises(GridRequired):
            envelope_up(opaque(lambda p: 1 - p[:, 0] ** 2))

    def test_origin_in_hull_of_positive_set(self):
        # f(a, b) = a^2/b - 1 for b > 0, -1 at the origin: f = 1 along x_n, x_n -> 0,
        # so the origin lies in the closed hull of F although f(0, 0) < 0
        def fn(p):
            a, b = p[:, 0], p[:, 1]
            with np.errstate(divide="ignore", invalid="ignore"):
                v = np.where(b > 0, a * a / b - 1, np.inf)
            return np.where((a == 0) & (b == 0), -1.0, v)
        f = opaque(fn, dim=2, meta=G0)
        n = np.arange(1, 8)
        xn = np.column_stack([2.0 ** -n, 2.0 ** (-2 * n - 1)])
        np.testing.assert_allclose(f(xn), 1.0)
        assert f([0.0, 0.0]) == -1.0
        # F contains (+-t, b) for large t, so its closed hull is {b >= 0}
        up = _UpClosedForm(f, HalfSpace([0.0, 1.0], 0.0))
        assert up([0.0, 0.0]) == 0.0
        assert up([1.0, 0.25]) == 3.0
        assert up([0.0, -0.1]) == math.inf
        # a grid sees no positive node on b = 0, so the grid hull misses the origin
        r = envelope_up(f, GridSpec((-1.0, 0.0), (1.0, 1.0), (41, 41)))
        assert not r.extra["hull"].contains(np.array([[0.0, 0.0]]))[0]


class TestInvariants:
    @settings(max_examples=40, deadline=None)
    @given(st.floats(1.2, 4.0), st.floats(0.2, 3.0), st.floats(-2.0, -0.1))
    def test_down_up_orderings(self, p, mult, shift):
        f = NormPowerShifted(p, mult=mult, shift=shift)
        x = np.linspace(-4, 4, 161)
        fx = f(x)
        down, up = envelope_down(f).handle(x), envelope_up(f).handle(x)
        assert np.all(down <= restrict_down(f)(x))
        assert np.all(up <= restrict_up(f)(x))
        assert np.all(down[np.isfinite(down)] <= 0)
        assert np.all(up[np.isfinite(up)] >= 0)
        np.testing.assert_array_equal(down[fx < 0], fx[fx < 0])
        np.testing.assert_array_equal(up[fx > 0], fx[fx > 0])


class TestHuberBerhu:
    def test_knot(self):
        assert huber(1.0, 2.0)(1.0) == 1.0
        assert berhu(1.0, 2.0)(1.0) == 1.0

    def test_berhu_values(self):
        assert berhu(1.0, 2.0)(0.5) == 0.5
        assert berhu(1.0, 2.0)(2.0) == 2.5

    @pytest.mark.parametrize("alpha, p", [(0.0, 2.0), (1.0, 1.0), (-1.0, 3.0)])
    def test_ranges(self, alpha, p):
        with pytest.raises(ParameterOutOfRange):
            huber(alpha, p)
        with pytest.raises(ParameterOutOfRange):
            berhu(alpha, p)

    @given(st.floats(0.1, 5.0), st.floats(1.1, 5.0), st.floats(0.0, 20.0))
    def test_continuous_at_knot(self, alpha, p, _):
        knot = alpha ** (1 / (p - 1))
        for f in (huber(alpha, p), berhu(alpha, p)):
            lo, hi = f(knot * (1 - 1e-9)), f(knot * (1 + 1e-9))
            assert hi == pytest.approx(lo, rel=1e-6, abs=1e-9)


class TestMaxDecomposition:
    def test_figure_one_points(self):
        f = NormPowerShifted(2.0, shift=0.5, dim=2)
        rep = max_decomposition_check(f, np.array([[2.0, 0.0], [0.0, 0.0], [1.0, 1.0]]))
        assert rep.route == "analytic"
        np.testing.assert_allclose(rep.values, [2.5, 0.5, 1.5])
        np.testing.assert_array_equal(rep.maxima, rep.values)
        assert np.max(rep.abs_diff) == 0.0

    def test_hypothesis_fails(self):
        with pytest.raises(HypothesisViolated):
            max_decomposition_check(NormPowerShifted(2.0), np.array([[1.0]]))

    def test_grid_route(self):
        f = opaque(lambda p: p[:, 0] ** 2 / 2 + 0.5, meta=G0)
        grid = GridSpec((-3.0,), (3.0,), (241,))
        rep = max_decomposition_check(f, np.array([[0.0], [0.5], [1.5]]), grid=grid)
        assert rep.route != "analytic"
        assert np.max(rep.abs_diff) <= 2e-3
