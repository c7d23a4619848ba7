"""Down and up envelopes of a function and the Huber/Berhu pair.

``f∨`` keeps the strictly negative finite values of ``f`` and ``f∧`` the
strictly positive finite ones (+inf elsewhere); the envelopes are their
biconjugates.  For proper lsc convex ``f`` they have closed forms:
``f▼ = f + indicator{f <= 0}`` and ``f▲ = max{f, 0} + indicator(cl conv {f > 0})``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyNegativeSet, EmptyPositiveSet, GridRequired, HypothesisViolated
from .funcs.core import Func, Meta
from .funcs.families import Berhu, Huber, Radial
from .funcs.grid import GridBacked, GridFunction, sample
from .sets import hull_from_points
from .transform import (biconjugate_grid, conjugate_grid, hull_of_positive_set,
                        slope_dual_spec)

CLOSED_FORM = "ClosedFormGamma0"
ORACLE = "OracleBiconjugate"


class _Restricted(Func):
    def __init__(self, f, sign):
        self.base, self.sign, self.dim = f, sign, f.dim
        tag = "Down" if sign < 0 else "Up"
        self.meta = Meta(convex=True if f.meta.convex else None, family=f"Restrict{tag}[{f.family}]")

    def _eval(self, pts):
        v = self.base._eval(pts)
        keep = (v < 0) & (v > -np.inf) if self.sign < 0 else (v > 0) & (v < np.inf)
        return np.where(keep, v, np.inf)


def restrict_down(f):
    """``f∨``: ``f`` where ``-inf < f < 0``, +inf elsewhere."""
    return _Restricted(f, -1)


def restrict_up(f):
    """``f∧``: ``f`` where ``0 < f < +inf``, +inf elsewhere."""
    return _Restricted(f, +1)


class _SublevelClosedForm(Func):
    """``f + indicator{f <= 0}``."""

    def __init__(self, f):
        self.base, self.dim = f, f.dim
        self.meta = Meta(convex=True, lsc=True, proper=True, family=f"Down[{f.family}]")

    def _eval(self, pts):
        v = self.base._eval(pts)
        return np.where(v <= 0, v, np.inf)


class _UpClosedForm(Func):
    """``max{f, 0} + indicator(hull)``."""

    def __init__(self, f, hull):
        self.base, self.hull, self.dim = f, hull, f.dim
        self.meta = Meta(convex=True, lsc=True, proper=True, family=f"Up[{f.family}]")

    def _eval(self, pts):
        v = np.maximum(self.base._eval(pts), 0.0)
        return np.where(self.hull.contains(pts), v, np.inf)


@dataclass
class EnvelopeResult:
    handle: Func
    route: str
    cam_empty: bool = False
    extra: dict = field(default_factory=dict)


def _has_negative_value(f, grid):
    info = f.infimum()
    if info is not None:
        return info[0] < 0
    if grid is not None:
        return bool(np.any(sample(f, grid).values < 0))
    raise GridRequired("cannot establish that f takes a negative value without a grid")


def _oracle(restricted, grid, dual, empty_error):
    if grid is None:
        raise GridRequired("the oracle route needs a primal grid")
    gf = sample(restricted, grid)
    if not np.any(np.isfinite(gf.values)):
        raise empty_error("the restricted function is identically +inf on the grid")
    dual = dual or slope_dual_spec(gf)
    conj = conjugate_grid(gf, dual)
    cam_empty = bool(np.all(conj.boundary_argmax))
    bi = conjugate_grid(conj, grid)
    if grid.dim <= 2:
        # the truncated dual cannot see the +inf wall; cut back to the hull of finite nodes
        nodes = grid.nodes()
        fin = np.isfinite(gf.values)
        hull = hull_from_points(nodes[fin], grid.dim)
        inside = hull.contains(nodes.reshape(-1, grid.dim)).reshape(grid.shape)
        bi = GridFunction(grid, np.where(inside, bi.values, np.inf), bi.flags, bi.boundary_argmax)
    return EnvelopeResult(GridBacked(bi), ORACLE, cam_empty, {"dual": dual, "grid": bi})


def envelope_down(f, grid=None, dual=None):
    """``f▼``: closed form for certified proper lsc convex ``f``, grid oracle otherwise.

    Raises
    ------
    EmptyNegativeSet
        ``f`` never takes a negative value.
    GridRequired
        The oracle route is needed and ``grid`` is None.
    """
    if f.meta.gamma0:
        if not _has_negative_value(f, grid):
            raise EmptyNegativeSet("f takes no negative value")
        return EnvelopeResult(_SublevelClosedForm(f), CLOSED_FORM)
    return _oracle(restrict_down(f), grid, dual, EmptyNegativeSet)


def envelope_up(f, grid=None, dual=None):
    """``f▲``: closed form for certified proper lsc convex ``f``, grid oracle otherwise."""
    if f.meta.gamma0:
        hull = f.positive_hull()
        if hull is None:
            if isinstance(f, Radial):
                raise EmptyPositiveSet("f takes no positive finite value")
            if grid is None:
                raise GridRequired("no analytic description of {f > 0}; supply a grid")
            hull = hull_of_positive_set(f, grid)
        return EnvelopeResult(_UpClosedForm(f, hull), CLOSED_FORM, extra={"hull": hull})
    return _oracle(restrict_up(f), grid, dual, EmptyPositiveSet)


def huber(alpha, p, norm="euclidean", dim=1):
    """p-th order Huber function."""
    return Huber(alpha, p, norm=norm, dim=dim)


def berhu(alpha, p, norm="euclidean", dim=1):
    """p-th order Berhu (reversed Huber) function."""
    return Berhu(alpha, p, norm=norm, dim=dim)


@dataclass
class DecompositionReport:
    points: np.ndarray
    values: np.ndarray
    down: np.ndarray
    up: np.ndarray
    route: str

    @property
    def maxima(self):
        return np.maximum(self.down, self.up)

    @property
    def abs_diff(self):
        return np.abs(self.values - self.maxima)


def max_decomposition_check(f, points, grid=None, dual=None):
    """Compare ``f`` with ``max{f*▼*, f*▲*}`` at ``points``.

    The analytic route uses the family's stored parts; otherwise the parts
    are built on ``grid``/``dual`` by restricting the grid conjugate by
    sign and conjugating back.
    """
    if not f.meta.gamma0:
        raise HypothesisViolated("f must be certified proper, lsc and convex")
    f0 = float(f(np.zeros(f.dim)))
    if not f0 > 0:
        raise HypothesisViolated("inf f* = -f(0) >= 0, so f* has no negative value")
    pts = np.asarray(points, dtype=float)
    vals = f(pts)
    down, up = f.down_part(), f.up_part()
    if down is not None and up is not None:
        return DecompositionReport(pts, vals, down(pts), up(pts), "analytic")
    if grid is None:
        raise GridRequired("no stored decomposition; supply a grid")
    gf = sample(f, grid)
    dual = dual or slope_dual_spec(gf)
    conj = conjugate_grid(gf, dual)
    cv = conj.values
    parts = []
    for keep in (cv < 0, cv > 0):
        restricted = type(conj)(dual, np.where(keep, cv, np.inf))
        parts.append(GridBacked(conjugate_grid(restricted, grid))(pts))
    return DecompositionReport(pts, vals, parts[0], parts[1], "grid")
