"""Analytic scaling families s with closed-form envelopes.

Each family exposes the hull of its positivity set ``S = {s > 0}``, the up
envelope ``s▲``, the down envelope ``(-s)▼`` (when ``(-s)∨`` has an affine
minorant) and the conjugates of both, which feed the perspective and
conjugate formulas.
"""

import math

import numpy as np

from ..errors import ParameterOutOfRange
from ..sets import HullSet1D, Orthant
from .core import Func, Meta, as_points

_GAMMA0 = dict(convex=True, lsc=True, proper=True)


class Formula(Func):
    """Func wrapping a vectorized formula on an ``(n, dim)`` array."""

    def __init__(self, fn, dim, family, meta=None, params=None):
        self.fn, self.dim = fn, dim
        m = meta or Meta(**_GAMMA0)
        self.meta = Meta(m.convex, m.lsc, m.proper, family, m.neg_convex, m.neg_lsc, m.neg_proper)
        self._params = params or {}

    def _eval(self, pts):
        return self.fn(pts)

    def params(self):
        return dict(self._params)


def _on_halfline(values_fn):
    """Formula on ``y >= 0``, +inf below."""
    def fn(pts):
        y = pts[:, 0]
        with np.errstate(invalid="ignore", divide="ignore"):
            v = values_fn(np.maximum(y, 0.0))
        return np.where(y >= 0, v, np.inf)
    return fn


def _scalar_arg(t):
    t, shape = as_points(t, 1)
    return t[:, 0], shape


class PowerScaling(Func):
    """``y -> y^q`` on ``y >= 0``; the value below zero is ``below`` (+inf or -inf)."""

    def __init__(self, q, below=math.inf):
        q, below = float(q), float(below)
        if not (q > 0 and math.isfinite(q)):
            raise ParameterOutOfRange("q must be a finite real > 0")
        if below not in (math.inf, -math.inf):
            raise ParameterOutOfRange("below must be +inf or -inf")
        self.q, self.below, self.dim = q, below, 1
        if below > 0:
            self.meta = Meta(convex=q >= 1, lsc=True, proper=True, family="PowerScaling",
                             neg_convex=False, neg_lsc=False, neg_proper=False)
        else:
            self.meta = Meta(convex=False, lsc=False, proper=False, family="PowerScaling",
                             neg_convex=q <= 1, neg_lsc=True, neg_proper=True)

    def _eval(self, pts):
        y = pts[:, 0]
        with np.errstate(invalid="ignore"):
            v = np.maximum(y, 0.0) ** self.q
        return np.where(y >= 0, v, self.below)

    def params(self):
        return {"q": self.q, "below": "+inf" if self.below > 0 else "-inf"}

    def positive_hull(self):
        return HullSet1D(0.0, math.inf)

    def positive_set_convex(self):
        return True

    def infimum(self):
        return (0.0, np.zeros(1)) if self.below > 0 else (-math.inf, None)

    def up_envelope(self):
        q = self.q
        if q > 1:
            fn = _on_halfline(lambda y: y ** q)
        elif q == 1:
            fn = _on_halfline(lambda y: y)
        else:
            fn = _on_halfline(lambda y: np.zeros_like(y))
        return Formula(fn, 1, "PowerScalingUp", params=self.params())

    def neg_down_envelope(self):
        q = self.q
        if q > 1:
            return None
        fn = _on_halfline((lambda y: -y) if q == 1 else (lambda y: -(y ** q)))
        return Formula(fn, 1, "PowerScalingNegDown", params=self.params())

    def cam_neg_restricted(self):
        return self.q <= 1

    def up_conjugate(self, t):
        t, shape = _scalar_arg(t)
        q = self.q
        if q > 1:
            with np.errstate(invalid="ignore", over="ignore"):
                v = (q - 1.0) * (np.maximum(t, 0.0) / q) ** (q / (q - 1.0))
            out = np.where(t <= 0, 0.0, v)
        elif q == 1:
            out = np.where(t <= 1, 0.0, np.inf)
        else:
            out = np.where(t <= 0, 0.0, np.inf)
        return out.reshape(shape)

    def neg_down_conjugate(self, t):
        t, shape = _scalar_arg(t)
        q = self.q
        if q > 1:
            return None
        if q == 1:
            out = np.where(t <= -1, 0.0, np.inf)
        else:
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                v = (1.0 - q) * (q / np.maximum(-t, 0.0)) ** (q / (1.0 - q))
            out = np.where(t < 0, v, np.inf)
        return out.reshape(shape)


class ClippedQuadraticScaling(Func):
    """``y - (b^2+1)/2`` for ``y > 1``, ``(y^2 - b^2)/2`` on ``[-1, 1]``, +inf below -1."""

    def __init__(self, beta):
        beta = float(beta)
        if not 0 <= beta < 1:
            raise ParameterOutOfRange("beta must lie in [0, 1)")
        self.beta, self.dim = beta, 1
        self.meta = Meta(family="ClippedQuadraticScaling", neg_convex=False, neg_lsc=False,
                         neg_proper=False, **_GAMMA0)

    def _eval(self, pts):
        y, b2 = pts[:, 0], self.beta ** 2
        return np.where(y > 1, y - (b2 + 1) / 2, np.where(y >= -1, (y * y - b2) / 2, np.inf))

    def params(self):
        return {"beta": self.beta}

    def positive_hull(self):
        return HullSet1D(-1.0, math.inf)

    def positive_set_convex(self):
        return False

    def infimum(self):
        return -self.beta ** 2 / 2, np.zeros(1)

    def up_envelope(self):
        def fn(pts):
            v = self._eval(pts)
            return np.where(np.isfinite(v), np.maximum(v, 0.0), v)
        return Formula(fn, 1, "ClippedQuadraticUp", params=self.params())

    def neg_down_envelope(self):
        c = (3 - self.beta ** 2) / 2
        def fn(pts):
            y = pts[:, 0]
            return np.where(y >= -1, -y - c, np.inf)
        return Formula(fn, 1, "ClippedQuadraticNegDown", params=self.params())

    def cam_neg_restricted(self):
        return True

    def up_conjugate(self, t):
        t, shape = _scalar_arg(t)
        b = self.beta
        a = np.abs(t)
        out = np.where(a <= b, b * a, (t * t + b * b) / 2)
        out = np.where(t < -1, -t - (1 - b * b) / 2, out)
        out = np.where(t > 1, np.inf, out)
        return out.reshape(shape)

    def neg_down_conjugate(self, t):
        t, shape = _scalar_arg(t)
        out = np.where(t <= -1, -t + (1 - self.beta ** 2) / 2, np.inf)
        return out.reshape(shape)


class MaxZeroAffine(Func):
    """``y -> max{0, y}``."""

    dim = 1
    meta = Meta(family="MaxZeroAffine", neg_convex=False, neg_lsc=True, neg_proper=True, **_GAMMA0)

    def _eval(self, pts):
        return np.maximum(pts[:, 0], 0.0)

    def positive_hull(self):
        return HullSet1D(0.0, math.inf)

    def positive_set_convex(self):
        return True

    def infimum(self):
        return 0.0, np.zeros(1)

    def up_envelope(self):
        return Formula(_on_halfline(lambda y: y), 1, "MaxZeroAffineUp")

    def neg_down_envelope(self):
        return Formula(_on_halfline(lambda y: -y), 1, "MaxZeroAffineNegDown")

    def cam_neg_restricted(self):
        return True

    def up_conjugate(self, t):
        t, shape = _scalar_arg(t)
        return np.where(t <= 1, 0.0, np.inf).reshape(shape)

    def neg_down_conjugate(self, t):
        t, shape = _scalar_arg(t)
        return np.where(t <= -1, 0.0, np.inf).reshape(shape)


def _golden_max(fun, lo, hi, iters=120):
    """Vectorized golden-section maximization of concave ``fun(y)`` on ``[lo, hi]``."""
    g = (math.sqrt(5) - 1) / 2
    a = np.full_like(np.asarray(fun.t, dtype=float), lo)
    b = np.full_like(a, hi)
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        left = fc >= fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        d_new = np.where(left, c, a + g * (b - a))
        c_new = np.where(left, b - g * (b - a), d)
        fd_new = np.where(left, fc, np.nan)
        fc_new = np.where(left, np.nan, fd)
        c, d = c_new, d_new
        fc = np.where(np.isnan(fc_new), fun(c), fc_new)
        fd = np.where(np.isnan(fd_new), fun(d), fd_new)
    return np.maximum(np.maximum(fc, fd), np.maximum(fun(np.full_like(a, lo)), fun(np.full_like(a, hi))))


class BrenierMobility(Func):
    """``y -> y(1-y) / (alpha(1-y) + beta y)`` on ``[0, 1]``, -inf elsewhere (concave)."""

    def __init__(self, alpha, beta):
        alpha, beta = float(alpha), float(beta)
        if not (alpha > 0 and beta > 0 and math.isfinite(alpha) and math.isfinite(beta)):
            raise ParameterOutOfRange("alpha and beta must be finite reals > 0")
        self.alpha, self.beta, self.dim = alpha, beta, 1
        self.meta = Meta(convex=False, lsc=False, proper=False, family="BrenierMobility",
                         neg_convex=True, neg_lsc=True, neg_proper=True)

    def _values(self, y):
        return y * (1 - y) / (self.alpha * (1 - y) + self.beta * y)

    def _eval(self, pts):
        y = pts[:, 0]
        inside = (y >= 0) & (y <= 1)
        return np.where(inside, self._values(np.clip(y, 0.0, 1.0)), -np.inf)

    def params(self):
        return {"alpha": self.alpha, "beta": self.beta}

    def positive_hull(self):
        return HullSet1D(0.0, 1.0)

    def positive_set_convex(self):
        return True

    def up_envelope(self):
        def fn(pts):
            y = pts[:, 0]
            return np.where((y >= 0) & (y <= 1), 0.0, np.inf)
        return Formula(fn, 1, "BrenierMobilityUp", params=self.params())

    def neg_down_envelope(self):
        def fn(pts):
            y = pts[:, 0]
            return np.where((y >= 0) & (y <= 1), -self._values(np.clip(y, 0.0, 1.0)), np.inf)
        return Formula(fn, 1, "BrenierMobilityNegDown", params=self.params())

    def cam_neg_restricted(self):
        return True

    def up_conjugate(self, t):
        t, shape = _scalar_arg(t)
        return np.maximum(t, 0.0).reshape(shape)

    def neg_down_conjugate(self, t):
        t, shape = _scalar_arg(t)

        def fun(y):
            return t * y + self._values(y)
        fun.t = t
        return _golden_max(fun, 0.0, 1.0).reshape(shape)


def geo_mean(y1, y2):
    """``sqrt(y1 y2)`` on the closed quadrant, -inf elsewhere."""
    y1, y2 = np.asarray(y1, dtype=float), np.asarray(y2, dtype=float)
    inside = (y1 >= 0) & (y2 >= 0)
    with np.errstate(invalid="ignore"):
        v = np.sqrt(np.maximum(y1, 0.0) * np.maximum(y2, 0.0))
    out = np.where(inside, v, -np.inf)
    return float(out) if out.ndim == 0 else out


def log_mean(y1, y2):
    """Logarithmic mean; 0 on the boundary rays of the quadrant, -inf outside it."""
    y1, y2 = np.asarray(y1, dtype=float), np.asarray(y2, dtype=float)
    y1, y2 = np.broadcast_arrays(y1, y2)
    pos = (y1 > 0) & (y2 > 0)
    edge = ((y1 == 0) & (y2 >= 0)) | ((y1 > 0) & (y2 == 0))
    # ordered so the log1p argument is >= 0 (accurate and exactly symmetric)
    a = np.where(pos, np.minimum(y1, y2), 1.0)
    b = np.where(pos, np.maximum(y1, y2), 1.0)
    diag = np.abs(a - b) < 1e-12 * np.maximum(a, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = (b - a) / np.log1p((b - a) / a)
    v = np.where(diag, a, ratio)
    out = np.where(pos, v, np.where(edge, 0.0, -np.inf))
    return float(out) if out.ndim == 0 else out


class _MeanScaling(Func):
    dim = 2

    def __init__(self):
        self.meta = Meta(convex=False, lsc=False, proper=False, family=self.family_name,
                         neg_convex=True, neg_lsc=True, neg_proper=True)

    def positive_hull(self):
        return Orthant(2)

    def positive_set_convex(self):
        return True

    def infimum(self):
        return -math.inf, None

    def up_envelope(self):
        def fn(pts):
            return np.where(np.all(pts >= 0, axis=-1), 0.0, np.inf)
        return Formula(fn, 2, self.family_name + "Up")

    def neg_down_envelope(self):
        def fn(pts):
            v = self._eval(pts)
            return np.where(np.isfinite(v), -v, np.inf)
        return Formula(fn, 2, self.family_name + "NegDown")

    def cam_neg_restricted(self):
        return True

    def up_conjugate(self, eta):
        return Orthant(2).support(eta)


class GeoMeanScaling(_MeanScaling):
    family_name = "GeoMeanScaling"

    def _eval(self, pts):
        return geo_mean(pts[:, 0], pts[:, 1])

    def neg_down_conjugate(self, eta):
        pts, shape = as_points(eta, 2)
        e1, e2 = pts[:, 0], pts[:, 1]
        ok = (e1 <= 0) & (e2 <= 0) & (e1 * e2 >= 0.25)
        return np.where(ok, 0.0, np.inf).reshape(shape)


class LogMeanScaling(_MeanScaling):
    family_name = "LogMeanScaling"
    _theta = np.linspace(0.0, np.pi / 2, 4097)

    def _eval(self, pts):
        return log_mean(pts[:, 0], pts[:, 1])

    def neg_down_conjugate(self, eta):
        # 1-homogeneous integrand: the conjugate is 0 where <eta,y> + L(y) <= 0 on the unit arc
        pts, shape = as_points(eta, 2)
        c, s = np.cos(self._theta), np.sin(self._theta)
        arc = log_mean(np.maximum(c, 0.0), np.maximum(s, 0.0))
        g = pts[:, :1] * c + pts[:, 1:] * s + arc
        ok = np.max(g, axis=1) <= 1e-12
        return np.where(ok, 0.0, np.inf).reshape(shape)
