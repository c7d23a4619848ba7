"""Evaluable extended-real functions with structural metadata."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import DimensionMismatch
from ..extreal import NaNValue


@dataclass(frozen=True)
class Meta:
    """Tri-state structural flags (``None`` means unknown).

    ``neg_*`` flags describe ``-f``; they matter for scalings, where the
    convexity of ``-s`` selects formulas.
    """

    convex: Optional[bool] = None
    lsc: Optional[bool] = None
    proper: Optional[bool] = None
    family: str = "Opaque"
    neg_convex: Optional[bool] = None
    neg_lsc: Optional[bool] = None
    neg_proper: Optional[bool] = None

    @property
    def gamma0(self):
        """True only when convexity, lower semicontinuity and properness are all certified."""
        return self.convex is True and self.lsc is True and self.proper is True

    @property
    def neg_gamma0(self):
        return self.neg_convex is True and self.neg_lsc is True and self.neg_proper is True


def as_points(x, dim):
    """Reshape ``x`` to ``(n, dim)`` and return it with the leading batch shape.

    For ``dim == 1`` a trailing coordinate axis may be omitted.
    """
    x = np.asarray(x, dtype=float)
    if dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != dim:
        raise DimensionMismatch(f"expected points of dimension {dim}, got {x.shape[-1]}")
    if np.isnan(x).any():
        raise NaNValue("point coordinates contain NaN")
    return x.reshape(-1, dim), x.shape[:-1]


class Func:
    """Base class: an extended-real function on R^dim.

    Subclasses implement ``_eval(points)`` on an ``(n, dim)`` array.  The
    hook methods below return ``None`` when a family has no closed form for
    the requested object; callers then fall back to grid oracles.
    """

    dim = 1
    meta = Meta()

    def __call__(self, x):
        pts, shape = as_points(x, self.dim)
        vals = np.asarray(self._eval(pts), dtype=float).reshape(shape)
        if np.isnan(vals).any():
            raise NaNValue(f"{type(self).__name__} produced NaN")
        return float(vals) if vals.ndim == 0 else vals

    def _eval(self, pts):
        raise NotImplementedError

    @property
    def family(self):
        return self.meta.family

    def params(self):
        """Parameters identifying the function (used in output metadata)."""
        return {}

    # analytic hooks for functions playing the role of phi
    def conjugate(self):
        """Exact conjugate as a :class:`Func`, or None."""
        return None

    def closed_hull(self):
        """Closed convex hull (largest lsc convex minorant), or None."""
        return self if self.meta.gamma0 else None

    def recession(self, x):
        """Recession function of the closed hull at ``x``, or None."""
        return None

    def infimum(self):
        """``(value, point)`` of the exact infimum, or None."""
        return None

    def conjugate_sup(self):
        """Supremum of the conjugate over its domain, or None."""
        return None

    def down_part(self):
        """Conjugate of the down-restricted conjugate (Huber-type minorant), or None."""
        return None

    def up_part(self):
        """Conjugate of the up-restricted conjugate (Berhu-type part), or None."""
        return None

    def zero_set_support(self, x):
        """Support function of the zero set of the conjugate, or None."""
        return None

    def conjugate_witnesses(self):
        """Dual points worth probing when classifying the conjugate's sign."""
        return []

    # analytic hooks for functions playing the role of a scaling s
    def positive_hull(self):
        """Closed convex hull of ``{s > 0}`` as a ConvexSet, or None."""
        return None

    def positive_set_convex(self):
        return None

    def up_envelope(self):
        """The up envelope ``s▲``, or None."""
        return None

    def neg_down_envelope(self):
        """The down envelope ``(-s)▼``, or None (also when it does not exist)."""
        return None

    def cam_neg_restricted(self):
        """Whether ``(-s)∨`` has a continuous affine minorant (None if unknown)."""
        return None

    def up_conjugate(self, t):
        """Conjugate of ``s∧`` (equivalently of ``s▲``), or None."""
        return None

    def neg_down_conjugate(self, t):
        """Conjugate of ``(-s)∨``, or None."""
        return None


class Opaque(Func):
    """User-supplied vectorized evaluator ``fn(points) -> values``.

    ``fn`` receives an ``(n, dim)`` array.  Metadata defaults to unknown.
    """

    def __init__(self, fn, dim=1, meta=None, name="opaque"):
        self.fn, self.dim, self.name = fn, int(dim), name
        meta = meta or Meta()
        self.meta = Meta(meta.convex, meta.lsc, meta.proper, "Opaque",
                         meta.neg_convex, meta.neg_lsc, meta.neg_proper)

    def _eval(self, pts):
        return self.fn(pts)

    def params(self):
        return {"name": self.name}


class Negated(Func):
    """``-f``; turns the neg_* flags into the main flags and vice versa."""

    def __init__(self, f):
        self.base, self.dim = f, f.dim
        m = f.meta
        self.meta = Meta(m.neg_convex, m.neg_lsc, m.neg_proper, f"Neg[{m.family}]",
                         m.convex, m.lsc, m.proper)

    def _eval(self, pts):
        return -self.base._eval(pts)


def evaluate(f, x):
    """Value of ``f`` at a single point ``x`` (or a batch)."""
    return f(x)
