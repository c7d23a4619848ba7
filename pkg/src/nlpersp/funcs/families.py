"""Analytic families for the function phi (and affine maps).

Radial families are written as ``x -> g(||x||)`` with a nondecreasing
profile ``g`` on ``[0, inf)``.  The conjugate of such a function is
``xi -> g*(||xi||_*)`` with ``g*(t) = sup_r (r t - g(r))`` in the dual norm,
so every radial family only needs one-dimensional profile formulas.
"""

import math

import numpy as np
from scipy.optimize import brentq

from ..errors import ParameterOutOfRange
from ..sets import DUAL_NORM, Ball, HalfSpace, WholeSpace, vector_norm
from .core import Func, Meta, as_points

_GAMMA0 = dict(convex=True, lsc=True, proper=True)


def _check_norm(norm, dim):
    if norm not in DUAL_NORM:
        raise ParameterOutOfRange(f"unknown norm {norm!r}; use euclidean, sup or one")
    if dim not in (1, 2, 3):
        raise ParameterOutOfRange("dimension must be 1, 2 or 3")


def conjugate_exponent(p):
    return p / (p - 1.0)


def _largest_nonpositive(h, tmax=math.inf):
    """Largest ``t >= 0`` with ``h(t) <= 0`` for nondecreasing ``h``; None if ``h(0) > 0``."""
    if h(0.0) > 0:
        return None
    if math.isfinite(tmax) and h(tmax) <= 0:
        return tmax
    lo, hi = 0.0, 1.0
    while h(hi) <= 0:
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            return math.inf
    if math.isfinite(tmax):
        hi = min(hi, tmax)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if h(mid) <= 0:
            lo = mid
        else:
            hi = mid
    return lo


class Radial(Func):
    """Base class for ``x -> g(||x||)`` with nondecreasing profile ``g``.

    Subclasses provide ``profile``, optionally ``conj_profile`` and
    ``hull_profile``, and the scalar descriptors

    ``dom_radius``        sup of ``||x||`` over the domain of the closed hull
    ``profile_sup``       sup of ``g`` over that domain
    ``conj_dom_radius``   same for the conjugate (also the recession slope)
    ``conj_profile_sup``  sup of the conjugate over its domain
    """

    dom_radius = math.inf
    profile_sup = math.inf
    conj_dom_radius = math.inf
    conj_profile_sup = math.inf

    def __init__(self, dim, norm):
        _check_norm(norm, dim)
        self.dim, self.norm = int(dim), norm

    def _eval(self, pts):
        return self.profile(vector_norm(pts, self.norm))

    def profile(self, r):
        raise NotImplementedError

    def hull_profile(self, r):
        return self.profile(r)

    conj_profile = None
    profile_derivative = None

    def _scalar(self, fn, r):
        return float(fn(np.asarray(float(r))))

    def conjugate(self):
        if self.conj_profile is None:
            return None
        return RadialConjugate(self)

    def closed_hull(self):
        if self.meta.gamma0:
            return self
        return None

    def recession(self, x):
        pts, shape = as_points(x, self.dim)
        r = vector_norm(pts, self.norm)
        slope = self.conj_dom_radius
        with np.errstate(invalid="ignore"):
            out = np.where(r == 0, 0.0, slope * r)
        return out.reshape(shape)

    def infimum(self):
        # nondecreasing profile: the closed hull is smallest at the origin
        return self._scalar(self.hull_profile, 0.0), np.zeros(self.dim)

    def conjugate_sup(self):
        return self.conj_profile_sup if self.conj_profile is not None else None

    def _zero_radius(self):
        if self.conj_profile is None:
            return None
        return _largest_nonpositive(lambda t: self._scalar(self.conj_profile, t), self.conj_dom_radius)

    def zero_set_support(self, x):
        t_hi = self._zero_radius()
        if t_hi is None:
            return None
        if self._scalar(self.conj_profile, t_hi) < -1e-12 * max(1.0, abs(t_hi)):
            return None
        pts, shape = as_points(x, self.dim)
        r = vector_norm(pts, self.norm)
        with np.errstate(invalid="ignore"):
            out = np.where(r == 0, 0.0, t_hi * r)
        return out.reshape(shape)

    def conjugate_witnesses(self):
        if self.conj_profile is None:
            return []
        dual = DUAL_NORM[self.norm]
        e = np.zeros(self.dim)
        e[0] = 1.0 / float(vector_norm(np.eye(self.dim)[0], dual))
        ts = [0.0]
        cr = self.conj_dom_radius
        if math.isfinite(cr):
            ts += [0.5 * cr, cr]
        else:
            ts += [0.5, 1.0, 2.0, 4.0, 16.0, 256.0]
        z = self._zero_radius()
        if z is not None and math.isfinite(z):
            ts += [0.5 * z, z]
        return [t * e for t in ts]

    def positive_hull(self):
        if self.profile_sup <= 0:
            return None
        if math.isinf(self.dom_radius):
            return WholeSpace(self.dim)
        return Ball(self.dom_radius, self.norm, self.dim)

    def params(self):
        return {"norm": self.norm, "dim": self.dim}


class RadialProfile(Radial):
    """Radial function built from explicit profile callables."""

    def __init__(self, dim, norm, profile, conj_profile, *, dom_radius, profile_sup,
                 conj_dom_radius, conj_profile_sup, family, params=None, meta=None,
                 hull_profile=None):
        super().__init__(dim, norm)
        self._profile, self._hull = profile, hull_profile
        self.conj_profile = conj_profile
        self.dom_radius, self.profile_sup = dom_radius, profile_sup
        self.conj_dom_radius, self.conj_profile_sup = conj_dom_radius, conj_profile_sup
        self.meta = meta or Meta(family=family, **_GAMMA0)
        self._params = params or {}

    def profile(self, r):
        return self._profile(r)

    def hull_profile(self, r):
        return self._hull(r) if self._hull is not None else self._profile(r)

    def params(self):
        return dict(self._params, norm=self.norm, dim=self.dim)


class RadialConjugate(Radial):
    """Conjugate of a radial function, expressed in the dual norm."""

    def __init__(self, parent):
        super().__init__(parent.dim, DUAL_NORM[parent.norm])
        self.parent = parent
        self.conj_profile = parent.hull_profile
        self.dom_radius = parent.conj_dom_radius
        self.profile_sup = parent.conj_profile_sup
        self.conj_dom_radius = parent.dom_radius
        self.conj_profile_sup = parent.profile_sup
        self.meta = Meta(family=f"Conjugate[{parent.family}]", **_GAMMA0)

    def profile(self, r):
        return self.parent.conj_profile(r)

    def conjugate(self):
        hull = self.parent.closed_hull()
        return hull if hull is not None else RadialConjugate(self)

    def params(self):
        return {"of": self.parent.family, **self.parent.params()}


class NormPowerShifted(Radial):
    """``x -> mult * ||x||^p / p + shift``."""

    def __init__(self, p, mult=1.0, shift=0.0, norm="euclidean", dim=1):
        super().__init__(dim, norm)
        p, mult, shift = float(p), float(mult), float(shift)
        if not p > 1 or not math.isfinite(p):
            raise ParameterOutOfRange("p must be a finite real > 1")
        if not mult >= 0 or not math.isfinite(mult):
            raise ParameterOutOfRange("mult must be finite and >= 0")
        if not math.isfinite(shift):
            raise ParameterOutOfRange("shift must be finite")
        self.p, self.mult, self.shift = p, mult, shift
        self.ps = conjugate_exponent(p)
        self.meta = Meta(family="NormPowerShifted", **_GAMMA0)
        if mult > 0:
            self.profile_sup = self.conj_dom_radius = self.conj_profile_sup = math.inf
        else:
            self.profile_sup = shift
            self.conj_dom_radius = 0.0
            self.conj_profile_sup = -shift

    def profile(self, r):
        with np.errstate(over="ignore"):
            return self.mult * np.asarray(r, dtype=float) ** self.p / self.p + self.shift

    def profile_derivative(self, r):
        return self.mult * np.asarray(r, dtype=float) ** (self.p - 1.0)

    def conj_profile(self, t):
        t = np.asarray(t, dtype=float)
        if self.mult > 0:
            with np.errstate(over="ignore"):
                return self.mult ** (1.0 - self.ps) * t ** self.ps / self.ps - self.shift
        return np.where(t == 0, -self.shift, np.inf)

    def _zero_radius(self):
        if self.mult > 0:
            if self.shift < 0:
                return None
            return (self.shift * self.ps * self.mult ** (self.ps - 1.0)) ** (1.0 / self.ps)
        return 0.0 if self.shift == 0 else None

    def _mixed_alpha(self):
        if self.mult > 0 and self.shift > 0:
            return (self.shift * self.ps / self.mult) ** (1.0 / self.ps)
        return None

    def down_part(self):
        a = self._mixed_alpha()
        return None if a is None else Huber(a, self.p, mult=self.mult, norm=self.norm, dim=self.dim)

    def up_part(self):
        a = self._mixed_alpha()
        return None if a is None else Berhu(a, self.p, mult=self.mult, norm=self.norm, dim=self.dim)

    def params(self):
        return {"p": self.p, "mult": self.mult, "shift": self.shift, "norm": self.norm, "dim": self.dim}


class _HuberBase(Radial):
    def __init__(self, alpha, p, mult=1.0, norm="euclidean", dim=1):
        super().__init__(dim, norm)
        alpha, p, mult = float(alpha), float(p), float(mult)
        if not (alpha > 0 and math.isfinite(alpha)):
            raise ParameterOutOfRange("alpha must be a finite real > 0")
        if not (p > 1 and math.isfinite(p)):
            raise ParameterOutOfRange("p must be a finite real > 1")
        if not (mult > 0 and math.isfinite(mult)):
            raise ParameterOutOfRange("mult must be a finite real > 0")
        self.alpha, self.p, self.mult = alpha, p, mult
        self.ps = conjugate_exponent(p)
        self.knot = alpha ** (1.0 / (p - 1.0))
        self.offset = alpha ** self.ps / self.ps

    def _zero_radius(self):
        return self.mult * self.alpha

    def params(self):
        return {"alpha": self.alpha, "p": self.p, "mult": self.mult, "norm": self.norm, "dim": self.dim}


class Huber(_HuberBase):
    """p-th order Huber function (times ``mult``).

    ``alpha ||x||`` beyond the knot ``alpha^(1/(p-1))``, and
    ``||x||^p / p + alpha^p* / p*`` inside it.
    """

    def __init__(self, alpha, p, mult=1.0, norm="euclidean", dim=1):
        super().__init__(alpha, p, mult, norm, dim)
        self.meta = Meta(family="Huber", **_GAMMA0)
        self.conj_dom_radius = mult * alpha
        self.conj_profile_sup = 0.0

    def profile(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            inner = r ** self.p / self.p + self.offset
        return self.mult * np.where(r > self.knot, self.alpha * r, inner)

    def profile_derivative(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(over="ignore"):
            return self.mult * np.where(r > self.knot, self.alpha, r ** (self.p - 1.0))

    def conj_profile(self, t):
        u = np.asarray(t, dtype=float) / self.mult
        with np.errstate(over="ignore", invalid="ignore"):
            val = self.mult * (u ** self.ps - self.alpha ** self.ps) / self.ps
        return np.where(u <= self.alpha, val, np.inf)


class Berhu(_HuberBase):
    """Reversed Huber: ``alpha ||x||`` inside the knot, ``||x||^p/p + alpha^p*/p*`` beyond."""

    def __init__(self, alpha, p, mult=1.0, norm="euclidean", dim=1):
        super().__init__(alpha, p, mult, norm, dim)
        self.meta = Meta(family="Berhu", **_GAMMA0)

    def profile(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            outer = r ** self.p / self.p + self.offset
        return self.mult * np.where(r > self.knot, outer, self.alpha * r)

    def profile_derivative(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(over="ignore"):
            return self.mult * np.where(r > self.knot, r ** (self.p - 1.0), self.alpha)

    def conj_profile(self, t):
        u = np.asarray(t, dtype=float) / self.mult
        with np.errstate(over="ignore"):
            return self.mult * np.maximum((u ** self.ps - self.alpha ** self.ps) / self.ps, 0.0)


class RadialIndicator(Radial):
    """``x -> base(x) + indicator{a <= ||x|| <= b}``; nonconvex when ``a > 0``.

    ``base`` is a :class:`NormPowerShifted` (or None for the zero function);
    ``b`` may be ``inf``.
    """

    def __init__(self, a, b, base=None, norm="euclidean", dim=1):
        super().__init__(dim, norm)
        a, b = float(a), float(b)
        if not (0 <= a <= b) or math.isnan(b):
            raise ParameterOutOfRange("need 0 <= a <= b")
        if base is not None and not isinstance(base, NormPowerShifted):
            raise ParameterOutOfRange("base must be NormPowerShifted or None")
        self.a, self.b = a, b
        self.base = base if base is not None else NormPowerShifted(2.0, 0.0, 0.0, norm, dim)
        self._c, self._p, self._shift = self.base.mult, self.base.p, self.base.shift
        self.meta = Meta(convex=(a == 0), lsc=True, proper=True, family="RadialIndicator")
        self.dom_radius = b
        self.profile_sup = float(self.base.profile(b)) if math.isfinite(b) else self.base.profile_sup
        if math.isfinite(b) or self._c > 0:
            self.conj_dom_radius = self.conj_profile_sup = math.inf
        else:
            self.conj_dom_radius, self.conj_profile_sup = 0.0, -self._shift

    def profile(self, r):
        r = np.asarray(r, dtype=float)
        return np.where((r >= self.a) & (r <= self.b), self.base.profile(r), np.inf)

    def hull_profile(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= self.b, self.base.profile(np.maximum(r, self.a)), np.inf)

    def conj_profile(self, t):
        t = np.asarray(t, dtype=float)
        if self._c > 0:
            with np.errstate(over="ignore", divide="ignore"):
                rs = np.clip((t / self._c) ** (1.0 / (self._p - 1.0)), self.a, self.b)
            return rs * t - self.base.profile(rs)
        if math.isfinite(self.b):
            return self.b * t - self._shift
        return np.where(t == 0, -self._shift, np.inf)

    def closed_hull(self):
        if self.a == 0:
            return self
        return RadialProfile(self.dim, self.norm, self.hull_profile, self.conj_profile,
                             dom_radius=self.dom_radius, profile_sup=self.profile_sup,
                             conj_dom_radius=self.conj_dom_radius,
                             conj_profile_sup=self.conj_profile_sup,
                             family="RadialIndicatorHull", params=self.params())

    def infimum(self):
        point = np.zeros(self.dim)
        point[0] = self.a / float(vector_norm(np.eye(self.dim)[0], self.norm))
        return float(self.base.profile(self.a)), point

    def _split(self):
        """Root ``tau`` of the conjugate profile and the matching radius ``r0``."""
        if not (float(self.base.profile(self.a)) > 0 and self.conj_profile_sup > 0):
            return None
        h = lambda t: float(self.conj_profile(np.asarray(t)))
        hi = 1.0
        while h(hi) <= 0:
            hi *= 2.0
        tau = brentq(h, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
        if self._c > 0:
            r0 = min(max((tau / self._c) ** (1.0 / (self._p - 1.0)), self.a), self.b)
        else:
            r0 = self.b
        return tau, r0

    def _zero_radius(self):
        split = self._split()
        if split is not None:
            return split[0]
        return super()._zero_radius()

    def down_part(self):
        split = self._split()
        if split is None:
            return None
        tau, r0 = split
        h0 = float(self.hull_profile(r0))

        def prof(r):
            r = np.asarray(r, dtype=float)
            return np.where(r <= r0, self.hull_profile(np.minimum(r, r0)), h0 + tau * (r - r0))

        def cprof(t):
            t = np.asarray(t, dtype=float)
            return np.where(t <= tau, self.conj_profile(np.minimum(t, tau)), np.inf)

        return RadialProfile(self.dim, self.norm, prof, cprof, dom_radius=math.inf,
                             profile_sup=math.inf, conj_dom_radius=tau, conj_profile_sup=0.0,
                             family="RadialIndicatorDown", params=dict(self.params(), tau=tau, r0=r0))

    def up_part(self):
        split = self._split()
        if split is None:
            return None
        tau, r0 = split

        def prof(r):
            r = np.asarray(r, dtype=float)
            return np.where(r <= r0, tau * r, self.hull_profile(r))

        def cprof(t):
            return np.maximum(self.conj_profile(t), 0.0)

        return RadialProfile(self.dim, self.norm, prof, cprof, dom_radius=self.b,
                             profile_sup=self.profile_sup, conj_dom_radius=math.inf,
                             conj_profile_sup=math.inf, family="RadialIndicatorUp",
                             params=dict(self.params(), tau=tau, r0=r0))

    def params(self):
        return {"a": self.a, "b": self.b, "base": self.base.params(), "norm": self.norm, "dim": self.dim}


class PointIndicator(Func):
    """``indicator{center} + value`` (conjugate of an affine map)."""

    def __init__(self, center, value=0.0):
        self.center = np.atleast_1d(np.asarray(center, dtype=float))
        self.value = float(value)
        self.dim = len(self.center)
        self.meta = Meta(family="PointIndicator", **_GAMMA0)

    def _eval(self, pts):
        return np.where(np.all(pts == self.center, axis=-1), self.value, np.inf)

    def conjugate(self):
        return Affine(self.center, -self.value)

    def recession(self, x):
        pts, shape = as_points(x, self.dim)
        return np.where(np.all(pts == 0, axis=-1), 0.0, np.inf).reshape(shape)

    def infimum(self):
        return self.value, self.center.copy()

    def conjugate_sup(self):
        return -self.value if not np.any(self.center) else math.inf

    def params(self):
        return {"center": self.center.tolist(), "value": self.value}


class Affine(Func):
    """``x -> <w, x> + b``; usable both as phi and as a scaling."""

    def __init__(self, w, b=0.0):
        self.w = np.atleast_1d(np.asarray(w, dtype=float))
        self.b = float(b)
        if not np.all(np.isfinite(self.w)) or not math.isfinite(self.b):
            raise ParameterOutOfRange("affine coefficients must be finite")
        self.dim = len(self.w)
        if self.dim not in (1, 2, 3):
            raise ParameterOutOfRange("dimension must be 1, 2 or 3")
        self.meta = Meta(family="Affine", convex=True, lsc=True, proper=True,
                         neg_convex=True, neg_lsc=True, neg_proper=True)

    def _eval(self, pts):
        return pts @ self.w + self.b

    def params(self):
        return {"w": self.w.tolist(), "b": self.b}

    # phi role
    def conjugate(self):
        return PointIndicator(self.w, -self.b)

    def recession(self, x):
        pts, shape = as_points(x, self.dim)
        return (pts @ self.w).reshape(shape)

    def infimum(self):
        if np.any(self.w):
            return -math.inf, None
        return self.b, np.zeros(self.dim)

    def conjugate_sup(self):
        return -self.b

    def zero_set_support(self, x):
        if self.b != 0:
            return None
        return self.recession(x)

    def conjugate_witnesses(self):
        return [self.w.copy()]

    # scaling role
    def positive_hull(self):
        if np.any(self.w):
            return HalfSpace(self.w, self.b)
        return WholeSpace(self.dim) if self.b > 0 else None

    def positive_set_convex(self):
        return True

    def up_envelope(self):
        return _AffineOnHull(self, +1.0)

    def neg_down_envelope(self):
        return _AffineOnHull(self, -1.0)

    def cam_neg_restricted(self):
        return self.positive_hull() is not None

    def _collinear(self, eta):
        """Write ``eta = mu * w``; returns ``(mu, ok)``."""
        pts, shape = as_points(eta, self.dim)
        ww = self.w @ self.w
        if ww == 0:
            mu = np.zeros(len(pts))
            ok = np.all(pts == 0, axis=-1)
        else:
            mu = pts @ self.w / ww
            resid = pts - mu[:, None] * self.w
            scale = np.maximum(1.0, vector_norm(pts))
            ok = vector_norm(resid) <= 1e-12 * scale
        return mu.reshape(shape), ok.reshape(shape)

    def up_conjugate(self, eta):
        # conjugate of s + indicator{s >= 0}: -mu*b at eta = mu*w with mu <= 1
        mu, ok = self._collinear(eta)
        if not np.any(self.w):
            return np.where(ok, -self.b, np.inf)
        return np.where(ok & (mu <= 1), -mu * self.b, np.inf)

    def neg_down_conjugate(self, eta):
        # conjugate of -s + indicator{s >= 0}: -nu*b at eta = nu*w with nu <= -1
        mu, ok = self._collinear(eta)
        if not np.any(self.w):
            return np.where(ok, self.b, np.inf)
        return np.where(ok & (mu <= -1), -mu * self.b, np.inf)


class _AffineOnHull(Func):
    """``sign * s + indicator{s >= 0}`` for an affine ``s``."""

    def __init__(self, s, sign):
        self.s, self.sign, self.dim = s, sign, s.dim
        self.meta = Meta(family="AffineRestricted", **_GAMMA0)

    def _eval(self, pts):
        v = self.s._eval(pts)
        return np.where(v >= 0, self.sign * v, np.inf)
