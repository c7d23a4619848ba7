"""Closed convex sets with membership tests and support functions.

These describe closed convex hulls such as the hull of the positivity set
of a scaling.  Every set answers ``contains(points)`` (closed semantics,
boundary points are in) and ``support(u)``.
"""

import numpy as np

from .errors import DimensionMismatch, EmptyPositiveSet

_COLLINEAR_RTOL = 1e-12


def _points(x, dim):
    x = np.asarray(x, dtype=float)
    if dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != dim:
        raise DimensionMismatch(f"expected points of dimension {dim}, got {x.shape[-1]}")
    return x


def vector_norm(x, kind="euclidean", axis=-1):
    """Norm of the trailing axis; ``kind`` is ``euclidean``, ``sup`` or ``one``."""
    x = np.asarray(x, dtype=float)
    if kind == "euclidean":
        if x.shape[axis] == 1:
            return np.abs(np.take(x, 0, axis=axis))
        return np.sqrt(np.sum(x * x, axis=axis))
    if kind == "sup":
        return np.max(np.abs(x), axis=axis)
    if kind == "one":
        return np.sum(np.abs(x), axis=axis)
    raise ValueError(f"unknown norm {kind!r}")


DUAL_NORM = {"euclidean": "euclidean", "sup": "one", "one": "sup"}


class ConvexSet:
    """Interface for closed convex sets in R^dim."""

    dim = 1

    def contains(self, points):
        raise NotImplementedError

    def support(self, u):
        raise NotImplementedError

    def to_dict(self):
        return {"kind": type(self).__name__}


class HullSet1D(ConvexSet):
    """Closed interval ``[lo, hi]``; an unbounded flag extends that end to infinity.

    Infinite endpoints are also accepted directly and imply the flag.
    """

    dim = 1

    def __init__(self, lo, hi, lo_unbounded=False, hi_unbounded=False):
        lo, hi = float(lo), float(hi)
        if lo > hi:
            raise ValueError("empty interval")
        self.lo, self.hi = lo, hi
        self.lo_unbounded = bool(lo_unbounded) or lo == -np.inf
        self.hi_unbounded = bool(hi_unbounded) or hi == np.inf

    def contains(self, points):
        y = _points(points, 1)[..., 0]
        ok_lo = self.lo_unbounded | (y >= self.lo)
        ok_hi = self.hi_unbounded | (y <= self.hi)
        return ok_lo & ok_hi

    def support(self, u):
        u = _points(u, 1)[..., 0]
        hi = np.inf if self.hi_unbounded else self.hi
        lo = -np.inf if self.lo_unbounded else self.lo
        out = np.zeros_like(u)
        pos, neg = u > 0, u < 0
        with np.errstate(invalid="ignore"):
            out[pos] = hi * u[pos]
            out[neg] = lo * u[neg]
        return out

    def __repr__(self):
        return (f"HullSet1D({self.lo!r}, {self.hi!r}, lo_unbounded={self.lo_unbounded}, "
                f"hi_unbounded={self.hi_unbounded})")

    def to_dict(self):
        return {"kind": "interval", "lo": self.lo, "hi": self.hi,
                "lo_unbounded": self.lo_unbounded, "hi_unbounded": self.hi_unbounded}


def convex_hull_2d(points):
    """Counterclockwise hull vertices with collinear points dropped (monotone chain)."""
    pts = np.unique(np.asarray(points, dtype=float).reshape(-1, 2), axis=0)
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = np.array(lower[:-1] + upper[:-1])
    return hull


class HullSet2D(ConvexSet):
    """Convex polygon plus a recession cone generated by ``rays``.

    The set is ``conv(vertices) + cone(rays)``.  Grid-derived hulls use the
    axis directions of the box sides touched by positive nodes as rays.
    """

    dim = 2

    def __init__(self, vertices, rays=()):
        v = np.asarray(vertices, dtype=float).reshape(-1, 2)
        if len(v) == 0:
            raise ValueError("empty polygon")
        self.vertices = convex_hull_2d(v)
        self.rays = np.asarray(rays, dtype=float).reshape(-1, 2)
        self._normals = self._candidate_normals()
        self._bounds = self.support(self._normals)

    def _candidate_normals(self):
        v = self.vertices
        normals = [np.array([1.0, 0.0]), np.array([-1.0, 0.0]),
                   np.array([0.0, 1.0]), np.array([0.0, -1.0])]
        k = len(v)
        for i in range(k if k > 2 else k - 1):
            d = v[(i + 1) % k] - v[i]
            nrm = np.hypot(*d)
            if nrm > 0:
                d = d / nrm
                normals += [np.array([d[1], -d[0]]), np.array([-d[1], d[0]]), d, -d]
        for r in self.rays:
            nrm = np.hypot(*r)
            if nrm > 0:
                r = r / nrm
                normals += [np.array([r[1], -r[0]]), np.array([-r[1], r[0]]), r, -r]
        return np.array(normals)

    def support(self, u):
        u = _points(u, 2)
        vals = np.max(u @ self.vertices.T, axis=-1)
        if len(self.rays):
            scale = np.maximum(1.0, np.abs(u).max(axis=-1))
            unbounded = np.any(u @ self.rays.T > _COLLINEAR_RTOL * scale[..., None], axis=-1)
            vals = np.where(unbounded, np.inf, vals)
        return vals

    def contains(self, points):
        y = _points(points, 2)
        lhs = y @ self._normals.T
        scale = 1.0 + np.abs(y).max(axis=-1, keepdims=True) + np.abs(self.vertices).max()
        return np.all(lhs <= self._bounds + 1e-12 * scale, axis=-1)

    def __repr__(self):
        return f"HullSet2D(vertices={self.vertices.tolist()}, rays={self.rays.tolist()})"

    def to_dict(self):
        return {"kind": "polygon", "vertices": self.vertices.tolist(), "rays": self.rays.tolist()}


class HalfSpace(ConvexSet):
    """``{y : <w, y> + c >= 0}``."""

    def __init__(self, w, c):
        self.w = np.atleast_1d(np.asarray(w, dtype=float))
        self.c = float(c)
        self.dim = len(self.w)
        if not np.any(self.w):
            raise ValueError("half-space normal must be nonzero")

    def contains(self, points):
        y = _points(points, self.dim)
        return y @ self.w + self.c >= 0

    def support(self, u):
        # finite only for u = -lam * w with lam >= 0, where it equals lam * c
        u = _points(u, self.dim)
        ww = self.w @ self.w
        lam = -(u @ self.w) / ww
        resid = u + lam[..., None] * self.w
        scale = np.maximum(1.0, vector_norm(u))
        ok = (lam >= 0) & (vector_norm(resid) <= _COLLINEAR_RTOL * scale)
        return np.where(ok, lam * self.c, np.inf)

    def to_dict(self):
        return {"kind": "halfspace", "w": self.w.tolist(), "c": self.c}


class Orthant(ConvexSet):
    """Closed nonnegative orthant."""

    def __init__(self, dim):
        self.dim = dim

    def contains(self, points):
        return np.all(_points(points, self.dim) >= 0, axis=-1)

    def support(self, u):
        u = _points(u, self.dim)
        return np.where(np.all(u <= 0, axis=-1), 0.0, np.inf)

    def to_dict(self):
        return {"kind": "orthant", "dim": self.dim}


class Ball(ConvexSet):
    """Closed ball of a given radius around the origin."""

    def __init__(self, radius, norm="euclidean", dim=1):
        self.radius, self.norm, self.dim = float(radius), norm, dim

    def contains(self, points):
        return vector_norm(_points(points, self.dim), self.norm) <= self.radius

    def support(self, u):
        return self.radius * vector_norm(_points(u, self.dim), DUAL_NORM[self.norm])

    def to_dict(self):
        return {"kind": "ball", "radius": self.radius, "norm": self.norm}


class WholeSpace(ConvexSet):
    def __init__(self, dim):
        self.dim = dim

    def contains(self, points):
        y = _points(points, self.dim)
        return np.ones(y.shape[:-1], dtype=bool)

    def support(self, u):
        u = _points(u, self.dim)
        return np.where(np.all(u == 0, axis=-1), 0.0, np.inf)

    def to_dict(self):
        return {"kind": "whole_space", "dim": self.dim}


def support_function(hull, x):
    """Support function of ``hull`` at ``x``; float for a single point."""
    vals = hull.support(x)
    return float(vals) if np.ndim(vals) == 0 else vals


def hull_from_points(points, dim, lower=None, upper=None, counts=None, touched=None):
    """Hull of a finite point set, with flags for box sides in ``touched``.

    ``touched`` maps ``(axis, side)`` with side in ``{-1, +1}`` to True when
    the point set reaches that side of the sampling box.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, dim)
    if len(pts) == 0:
        raise EmptyPositiveSet("no positive nodes")
    touched = touched or {}
    if dim == 1:
        return HullSet1D(pts[:, 0].min(), pts[:, 0].max(),
                         lo_unbounded=touched.get((0, -1), False),
                         hi_unbounded=touched.get((0, 1), False))
    if dim == 2:
        rays = []
        for (axis, side), hit in sorted(touched.items()):
            if hit:
                r = np.zeros(2)
                r[axis] = side
                rays.append(r)
        return HullSet2D(pts, rays)
    raise DimensionMismatch("hulls are implemented for dimension 1 and 2")
