"""Uniform box grids, sampled functions and their CSV/JSON forms."""

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionMismatch
from ..extreal import ext_array, from_json_value, parse, render, to_json_value
from .core import Func, Meta, as_points


@dataclass(frozen=True)
class GridSpec:
    """Box ``[lower, upper]`` with ``counts[i]`` equispaced nodes on axis ``i``."""

    lower: tuple
    upper: tuple
    counts: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        n = tuple(int(v) for v in np.atleast_1d(self.counts))
        if not (len(lo) == len(hi) == len(n)):
            raise DimensionMismatch("lower, upper and counts must have the same length")
        if not 1 <= len(lo) <= 3:
            raise DimensionMismatch("grids have dimension 1, 2 or 3")
        if any(not (a < b) for a, b in zip(lo, hi)):
            raise ValueError("lower < upper must hold componentwise")
        if any(not np.isfinite(a) or not np.isfinite(b) for a, b in zip(lo, hi)):
            raise ValueError("grid bounds must be finite")
        if any(k < 2 for k in n):
            raise ValueError("each axis needs at least 2 nodes")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "counts", n)

    @property
    def dim(self):
        return len(self.counts)

    @property
    def shape(self):
        return self.counts

    @property
    def spacing(self):
        return tuple((b - a) / (k - 1) for a, b, k in zip(self.lower, self.upper, self.counts))

    def axes(self):
        return [np.linspace(a, b, k) for a, b, k in zip(self.lower, self.upper, self.counts)]

    def nodes(self):
        """Array of shape ``counts + (dim,)`` with node coordinates."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def refine(self):
        """Halve the spacing, keeping every existing node."""
        return GridSpec(self.lower, self.upper, tuple(2 * k - 1 for k in self.counts))

    def distance_to_boundary(self):
        """Distance from each node to the box boundary (max-over-axes metric not used)."""
        d = None
        for i, ax in enumerate(self.axes()):
            di = np.minimum(ax - self.lower[i], self.upper[i] - ax)
            shape = [1] * self.dim
            shape[i] = -1
            di = di.reshape(shape)
            d = di if d is None else np.minimum(d, di)
        return np.broadcast_to(d, self.shape).copy()

    def to_dict(self):
        return {"lower": list(self.lower), "upper": list(self.upper), "counts": list(self.counts)}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["lower"]), tuple(d["upper"]), tuple(d["counts"]))


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Extended-real samples on a :class:`GridSpec`.

    ``flags`` carries conditions such as ``"neg_inf_poisoned"``;
    ``boundary_argmax`` (conjugates only) marks dual nodes whose maximizing
    primal node lies on the primal box boundary, where truncation of the
    primal box may hide larger values; ``slack`` is the largest amount by
    which a biconjugate exceeded its input.
    """

    spec: GridSpec
    values: np.ndarray
    flags: frozenset = field(default_factory=frozenset)
    boundary_argmax: np.ndarray = None
    slack: float = 0.0

    def __post_init__(self):
        v = ext_array(self.values)
        if v.size != int(np.prod(self.spec.counts)):
            raise DimensionMismatch("values length must equal the product of counts")
        object.__setattr__(self, "values", v.reshape(self.spec.shape))
        object.__setattr__(self, "flags", frozenset(self.flags))

    @property
    def dim(self):
        return self.spec.dim

    def finite_mask(self):
        return np.isfinite(self.values)

    # serialization
    def to_csv(self, fh=None):
        """Write one row per node (coordinates then value); returns text when ``fh`` is None."""
        out = fh if fh is not None else io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow([f"x{i}" for i in range(self.dim)] + ["value"])
        nodes = self.spec.nodes().reshape(-1, self.dim)
        for p, v in zip(nodes, self.values.ravel()):
            w.writerow([repr(float(c)) for c in p] + [render(v)])
        return out.getvalue() if fh is None else None

    @classmethod
    def from_csv(cls, text, spec):
        rows = list(csv.reader(io.StringIO(text)))
        vals = [parse(r[-1]) for r in rows[1:]]
        return cls(spec, np.array(vals, dtype=float))

    def to_json(self):
        return json.dumps({"spec": self.spec.to_dict(),
                           "values": [to_json_value(v) for v in self.values.ravel()],
                           "flags": sorted(self.flags)}, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        spec = GridSpec.from_dict(d["spec"])
        vals = np.array([from_json_value(v) for v in d["values"]], dtype=float)
        return cls(spec, vals, frozenset(d.get("flags", ())))


def sample(f, spec):
    """Evaluate ``f`` at every node of ``spec``."""
    if f.dim != spec.dim:
        raise DimensionMismatch(f"function has dimension {f.dim}, grid has {spec.dim}")
    vals = f(spec.nodes())
    return GridFunction(spec, np.asarray(vals, dtype=float).reshape(spec.shape))


class GridBacked(Func):
    """Multilinear interpolation of a :class:`GridFunction`.

    Outside the box the value is +inf.  Inside a cell touching a +inf node
    the value is +inf unless the query sits exactly on a finite node.
    """

    def __init__(self, gf, meta=None):
        self.grid, self.dim = gf, gf.dim
        m = meta or Meta()
        self.meta = Meta(m.convex, m.lsc, m.proper, "GridBacked")
        self._axes = gf.spec.axes()

    def params(self):
        return {"grid": self.grid.spec.to_dict()}

    def _eval(self, pts):
        spec, vals = self.grid.spec, self.grid.values
        n = len(pts)
        inside = np.ones(n, dtype=bool)
        idx, frac = [], []
        for i, ax in enumerate(self._axes):
            h = spec.spacing[i]
            t = (pts[:, i] - spec.lower[i]) / h
            inside &= (pts[:, i] >= spec.lower[i] - 1e-12 * h) & (pts[:, i] <= spec.upper[i] + 1e-12 * h)
            k = np.clip(np.floor(t).astype(np.int64), 0, spec.counts[i] - 2)
            f = np.clip(t - k, 0.0, 1.0)
            f = np.where(np.abs(f) < 1e-12, 0.0, np.where(np.abs(f - 1) < 1e-12, 1.0, f))
            idx.append(k)
            frac.append(f)
        out = np.zeros(n)
        bad = np.zeros(n, dtype=bool)
        neg = np.zeros(n, dtype=bool)
        d = self.dim
        for corner in range(2 ** d):
            w = np.ones(n)
            ind = []
            for i in range(d):
                bit = (corner >> i) & 1
                w = w * (frac[i] if bit else 1.0 - frac[i])
                ind.append(idx[i] + bit)
            v = vals[tuple(ind)]
            active = w > 0
            bad |= active & (v == np.inf)
            neg |= active & (v == -np.inf)
            out += np.where(active & np.isfinite(v), w * np.where(np.isfinite(v), v, 0.0), 0.0)
        out[neg] = -np.inf
        out[bad] = np.inf
        out[~inside] = np.inf
        return out
