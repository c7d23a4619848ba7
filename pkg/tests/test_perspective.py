import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlpersp import classify_phi_star, perspective_eval, perspective_report, preperspective_eval
from nlpersp.errors import DimensionMismatch, HypothesisViolated, UnknownConjugate
from nlpersp.funcs import (Affine, Berhu, ClippedQuadraticScaling, Huber, MaxZeroAffine,
                           NormPowerShifted, PointIndicator, PowerScaling, RadialIndicator,
                           RadialProfile)
from nlpersp.funcs.core import Meta, Opaque
from nlpersp.perspective import (cam_nonempty, convexity_conditions, delta_comparison,
                                 delta_operation, perspective_case, preperspective_properness)

HALF_SQ = NormPowerShifted(2.0)
PHI3 = NormPowerShifted(2.0, shift=0.5)
IDENTITY = Affine([1.0], 0.0)
SQRT_LOWER = PowerScaling(0.5, below=-math.inf)
NORM = RadialProfile(1, "euclidean", lambda r: r, lambda t: np.where(t <= 1, 0.0, np.inf),
                     dom_radius=math.inf, profile_sup=math.inf, conj_dom_radius=1.0,
                     conj_profile_sup=0.0, family="Norm")
SPEED = RadialIndicator(1.0, 2.0, base=HALF_SQ)

ANALYTIC_PAIRS = {
    "huber_clipped": (Huber(1.0, 2.0), ClippedQuadraticScaling(0.5)),
    "berhu_clipped": (Berhu(1.0, 2.0), ClippedQuadraticScaling(0.5)),
    "phi3_clipped": (PHI3, ClippedQuadraticScaling(0.5)),
    "phi3_q_half": (PHI3, PowerScaling(0.5)),
    "phi3_q_two": (PHI3, PowerScaling(2.0)),
    "huber_sqrt": (Huber(1.0, 2.0), PowerScaling(0.5)),
    "berhu_q_two": (Berhu(1.0, 2.0), PowerScaling(2.0)),
    "classical": (HALF_SQ, IDENTITY),
    "transport": (HALF_SQ, SQRT_LOWER),
    "norm_sqrt": (NORM, PowerScaling(0.5)),
}


def _pool(rng, n=2000):
    return rng.uniform([-3.0, -1.5], [3.0, 3.0], size=(n, 2))


class TestPreperspective:
    def test_classical_quotient(self):
        assert preperspective_eval(HALF_SQ, IDENTITY, [2.0], [4.0]) == pytest.approx(0.5)

    @pytest.mark.parametrize("phi", [HALF_SQ, PHI3, Huber(1.0, 2.0), SPEED])
    def test_nonpositive_scale_is_inf(self, phi):
        assert preperspective_eval(phi, IDENTITY, [0.0], [0.0]) == math.inf
        assert preperspective_eval(phi, IDENTITY, [1.0], [-2.0]) == math.inf
        assert preperspective_eval(phi, SQRT_LOWER, [0.0], [-1.0]) == math.inf

    def test_speed_constraint(self):
        s = PowerScaling(0.5)
        assert preperspective_eval(SPEED, s, [1.0], [4.0]) == math.inf
        assert preperspective_eval(SPEED, s, [1.0], [1.0]) == pytest.approx(0.5)
        assert preperspective_eval(SPEED, s, [3.0], [4.0]) == pytest.approx(2.25)

    def test_vectorized(self):
        x = np.array([[2.0], [1.0], [0.0]])
        y = np.array([[4.0], [0.0], [1.0]])
        np.testing.assert_allclose(preperspective_eval(HALF_SQ, IDENTITY, x, y), [0.5, math.inf, 0.0])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            preperspective_eval(NormPowerShifted(2.0, dim=2), IDENTITY, [1.0, 2.0, 3.0], [1.0])


class TestProperness:
    def test_examples(self):
        assert preperspective_properness(HALF_SQ, IDENTITY)
        never = Opaque(lambda p: np.full(len(p), np.inf), 1, Meta())
        assert not preperspective_properness(never, IDENTITY)
        assert not preperspective_properness(HALF_SQ, Affine([0.0], -1.0))

    def test_opaque_scaling_probe(self):
        assert preperspective_properness(HALF_SQ, Opaque(lambda p: 1 - p[:, 0] ** 2, 1, Meta()))
        assert not preperspective_properness(HALF_SQ, Opaque(lambda p: -1 - p[:, 0] ** 2, 1, Meta()))


class TestConvexityConditions:
    def test_huber_subhomogeneous(self):
        c = convexity_conditions(Huber(1.0, 2.0), SQRT_LOWER)
        assert c["P30_iii"] is True
        # Huber(1, 2) is 1/2 at the origin
        assert c["P30_ii"] is False

    def test_zero_at_origin_and_concave_scaling(self):
        assert convexity_conditions(HALF_SQ, SQRT_LOWER)["P30_ii"] is True

    def test_affine_scaling(self):
        c = convexity_conditions(PHI3, IDENTITY)
        assert c == {"P30_i": True, "P30_ii": False, "P30_iii": False}

    def test_opaque_is_undetermined_or_refuted(self):
        # |x| is positively homogeneous, so sampling cannot refute; x^2 grows faster than linearly
        s = Opaque(lambda p: p[:, 0], 1, Meta())
        c = convexity_conditions(Opaque(lambda p: np.abs(p[:, 0]), 1, Meta()), s)
        assert c["P30_i"] is None and c["P30_ii"] is None and c["P30_iii"] is None
        assert convexity_conditions(Opaque(lambda p: p[:, 0] ** 2, 1, Meta()), s)["P30_iii"] is False


class TestClassify:
    def test_huber_nonpositive(self):
        sc = classify_phi_star(Huber(1.0, 2.0))
        assert sc.variant == "NonPositive" and sc.strict_negative
        assert sc.infimum == pytest.approx(-0.5)
        point, value = sc.witnesses[0]
        np.testing.assert_array_equal(point, [0.0])
        assert value == pytest.approx(-0.5)

    def test_norm_zero_infty(self):
        assert classify_phi_star(NORM).variant == "ZeroInfty"
        assert classify_phi_star(Affine([0.5], 0.0)).variant == "ZeroInfty"

    def test_shifted_square_mixed(self):
        sc = classify_phi_star(PHI3)
        assert sc.variant == "Mixed" and sc.strict_negative and sc.strict_positive

    def test_berhu_nonnegative(self):
        sc = classify_phi_star(Berhu(1.0, 2.0))
        assert sc.variant == "NonNegative" and sc.zero_attained

    def test_unknown_conjugate(self):
        with pytest.raises(UnknownConjugate):
            classify_phi_star(Opaque(lambda p: p[:, 0] ** 2, 1, Meta()))

    def test_json(self):
        d = json.loads(json.dumps(classify_phi_star(PHI3).to_dict()))
        assert d["variant"] == "Mixed" and d["infimum"] == -0.5


class TestCamNonempty:
    def test_first_disjunct(self):
        assert cam_nonempty(HALF_SQ, PowerScaling(2.0)) is True
        assert cam_nonempty(PHI3, PowerScaling(2.0)) is True

    def test_both_disjuncts_fail(self):
        # phi = indicator{0} - 1 has phi* = 1 > 0, and -s = -y^2 has no affine minorant
        assert cam_nonempty(PointIndicator([0.0], -1.0), PowerScaling(2.0)) is False

    def test_second_disjunct(self):
        assert cam_nonempty(PointIndicator([0.0], -1.0), SQRT_LOWER) is True


class TestPreperspectiveConjugate:
    def test_affine_scaling_indicator(self):
        r = perspective_report(HALF_SQ, IDENTITY)
        xs = np.array([[1.0], [1.0], [0.0], [2.0]])
        ys = np.array([[-0.5], [-0.4], [0.0], [-3.0]])
        np.testing.assert_array_equal(r.preperspective_conjugate(xs, ys), [0.0, math.inf, 0.0, 0.0])

    def test_zero_case_support_function(self):
        # phi*(0) = 0 and conv S = [0, inf[, so the value is the support function of the half-line
        r = perspective_report(HALF_SQ, PowerScaling(0.5))
        out = r.preperspective_conjugate(np.zeros((3, 1)), np.array([[-1.0], [0.0], [0.1]]))
        np.testing.assert_array_equal(out, [0.0, 0.0, math.inf])

    def test_matches_sup_formula(self):
        # brute force sup over (x, y) of <x*, x> + <y*, y> - prepersp(x, y)
        phi, s = Huber(1.0, 2.0), PowerScaling(0.5)
        r = perspective_report(phi, s)
        x = np.linspace(-30, 30, 1201)
        y = np.linspace(1e-6, 30, 1201)
        X, Y = np.meshgrid(x, y, indexing="ij")
        P = np.asarray(preperspective_eval(phi, s, X.reshape(-1, 1), Y.reshape(-1, 1))).reshape(X.shape)
        for xs, ys in [(0.5, -1.0), (0.0, -0.5), (-0.8, -2.0)]:
            brute = float(np.max(xs * X + ys * Y - P))
            closed = float(r.preperspective_conjugate([xs], [ys]))
            assert brute <= closed + 1e-9
            assert brute == pytest.approx(closed, abs=2e-2)


class TestPerspective:
    def test_classical(self):
        assert perspective_eval(HALF_SQ, IDENTITY, [2.0], [4.0]) == pytest.approx(0.5)
        assert perspective_eval(HALF_SQ, IDENTITY, [1.0], [0.0]) == math.inf
        assert perspective_eval(HALF_SQ, IDENTITY, [0.0], [0.0]) == 0.0
        assert perspective_eval(HALF_SQ, IDENTITY, [1.0], [-1.0]) == math.inf

    def test_huber_plateau_recession(self):
        phi, s = Huber(1.0, 2.0), ClippedQuadraticScaling(0.5)
        x = np.linspace(-3, 3, 13)[:, None]
        for y in (-0.5, 0.0, 0.3, 0.5):
            out = perspective_eval(phi, s, x, np.full_like(x, y))
            np.testing.assert_allclose(out, np.abs(x[:, 0]), atol=1e-15)

    def test_report_json(self):
        d = json.loads(perspective_report(PHI3, PowerScaling(0.5)).to_json())
        assert d["branch"] == "T55_vb" and d["sign_class"]["variant"] == "Mixed"
        assert d["cam"] is True
        assert all(h["status"] == "pass" for h in d["hypotheses_checked"])

    def test_case(self):
        assert perspective_case(HALF_SQ, IDENTITY) == "Affine_Ex51"

    def test_degenerate(self):
        phi, s = PointIndicator([0.0], -1.0), PowerScaling(2.0)
        r = perspective_report(phi, s)
        assert r.degenerate and r.branch == "Degenerate"
        with pytest.raises(HypothesisViolated):
            perspective_eval(phi, s, [0.0], [1.0])
        assert json.loads(r.to_json())["degenerate"] is True

    @pytest.mark.parametrize("name", ["huber_clipped", "transport", "classical", "norm_sqrt"])
    def test_forced_theorem_branch_agrees(self, name):
        phi, s = ANALYTIC_PAIRS[name]
        r = perspective_report(phi, s)
        assert r.branch != r.theorem_branch
        pts = _pool(np.random.default_rng(42))
        a = r.perspective(pts[:, :1], pts[:, 1:])
        b = r.perspective(pts[:, :1], pts[:, 1:], branch=r.theorem_branch)
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)

    @pytest.mark.parametrize("name", sorted(ANALYTIC_PAIRS))
    def test_minorant(self, name):
        phi, s = ANALYTIC_PAIRS[name]
        pts = _pool(np.random.default_rng(42))
        p = perspective_eval(phi, s, pts[:, :1], pts[:, 1:])
        q = preperspective_eval(phi, s, pts[:, :1], pts[:, 1:])
        assert np.all(p <= q + 1e-12 * np.maximum(1.0, np.abs(np.where(np.isfinite(q), q, 0.0))))

    @pytest.mark.parametrize("name, ylo", [("transport", 0.0), ("classical", 0.0),
                                           ("huber_clipped", 0.55)])
    def test_agreement_on_open_region(self, name, ylo):
        # branches whose formula is s(y) phi(x / s(y)) wherever 0 < s(y) < inf
        phi, s = ANALYTIC_PAIRS[name]
        rng = np.random.default_rng(42)
        x = rng.uniform(-3, 3, size=(500, 1))
        y = rng.uniform(ylo + 0.01, 3, size=(500, 1))
        np.testing.assert_allclose(perspective_eval(phi, s, x, y), preperspective_eval(phi, s, x, y),
                                   rtol=1e-13)

    def test_mixed_hull_drops_below(self):
        # x^2/(2y^2) + y^2/2 is not jointly convex, so its hull is strictly smaller somewhere
        phi, s = ANALYTIC_PAIRS["phi3_q_two"]
        assert perspective_case(phi, s) == "T55_va"
        p = float(perspective_eval(phi, s, [2.0], [1.0]))
        q = float(preperspective_eval(phi, s, [2.0], [1.0]))
        assert p < q - 0.1

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-5, 5), st.floats(0.01, 5), st.floats(0.1, 10))
    def test_classical_homogeneity(self, x, y, t):
        a = perspective_eval(HALF_SQ, IDENTITY, [t * x], [t * y])
        b = perspective_eval(HALF_SQ, IDENTITY, [x], [y])
        assert a == pytest.approx(t * b, rel=1e-12, abs=1e-300)


class TestDelta:
    def test_delta2_counterexample(self):
        assert float(delta_operation(HALF_SQ, MaxZeroAffine(), [0.0], [-1.0])) == 0.0
        assert float(perspective_eval(HALF_SQ, MaxZeroAffine(), [0.0], [-1.0])) == math.inf

    def test_delta2_equal_on_positive_set(self):
        rng = np.random.default_rng(42)
        x, y = rng.uniform(-3, 3, (500, 1)), rng.uniform(0.01, 3, (500, 1))
        rep = delta_comparison(HALF_SQ, MaxZeroAffine(), x, y)
        assert rep.violations == 0 and rep.strict_gaps == 0

    def test_delta1_equals_perspective(self):
        rng = np.random.default_rng(42)
        x, y = rng.uniform(-3, 3, (1000, 1)), rng.uniform(0.0, 3, (1000, 1))
        y[:50] = 0.0
        rep = delta_comparison(HALF_SQ, SQRT_LOWER, x, y, kind="delta1")
        assert rep.hypotheses[0]["status"] == "pass"
        assert rep.violations == 0 and rep.strict_gaps == 0

    def test_requires_gamma0(self):
        with pytest.raises(HypothesisViolated):
            delta_comparison(Opaque(lambda p: p[:, 0] ** 2, 1, Meta()), IDENTITY, [0.0], [1.0])
        with pytest.raises(HypothesisViolated):
            delta_comparison(HALF_SQ, IDENTITY, [0.0], [-1.0])
