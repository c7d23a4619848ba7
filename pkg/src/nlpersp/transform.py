"""Discrete Legendre-Fenchel oracle on box grids.

The reference conjugate is the exact maximum over primal nodes,
``max_x <x, xi> - f(x)``, evaluated at every dual node.  On product grids
the maximum over all nodes is an iterated maximum over axes, which the
default ``separable`` method exploits; ``direct`` evaluates the full double
loop and ``llt`` runs a linear-time Legendre transform per axis on the lower
convex hull of the data.
"""

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AllInfinite, BasepointOutsideDomain, DimensionMismatch
from .funcs.core import as_points
from .funcs.grid import GridBacked, GridFunction, GridSpec, sample
from .sets import HullSet1D, HullSet2D, hull_from_points, support_function

__all__ = [
    "HullSet1D", "HullSet2D", "conjugate_grid", "biconjugate_grid", "slope_dual_spec",
    "recession_numeric", "recession_numeric_batch", "hull_of_positive_set", "support_function",
    "oracle_convergence", "ConvergenceReport", "oracle_biconjugate", "grid_tolerance",
]

_CHUNK_ELEMS = 1 << 23
POISON_FLAG = "neg_inf_poisoned"


def _check(f, dual):
    if f.dim != dual.dim:
        raise DimensionMismatch(f"primal grid has dimension {f.dim}, dual grid {dual.dim}")
    vals = f.values
    if np.any(vals == -np.inf):
        return "poison"
    if not np.any(np.isfinite(vals)):
        raise AllInfinite("function is identically +inf on the grid")
    return None


def _pass_brute(x, g, xi, bnd):
    """Maximize ``x_k * xi_m + g[..., k]`` over ``k``; track boundary argmax."""
    n, m = len(x), len(xi)
    lead = g.shape[:-1]
    out = np.empty(lead + (m,))
    flag = np.empty(lead + (m,), dtype=bool)
    rows = int(np.prod(lead)) if lead else 1
    step = max(1, _CHUNK_ELEMS // max(1, rows * n))
    for k0 in range(0, m, step):
        sl = slice(k0, k0 + step)
        v = xi[sl, None] * x[None, :] + g[..., None, :]
        idx = np.argmax(v, axis=-1)
        out[..., sl] = np.take_along_axis(v, idx[..., None], axis=-1)[..., 0]
        b = (idx == 0) | (idx == n - 1)
        if bnd is not None:
            src = np.broadcast_to(bnd[..., None, :], v.shape)
            b |= np.take_along_axis(src, idx[..., None], axis=-1)[..., 0]
        flag[..., sl] = b
    return out, flag


def _lower_hull(x, y):
    """Indices of the lower convex hull of points ``(x_k, y_k)`` with ``x`` increasing."""
    hull = []
    for k in range(len(x)):
        while len(hull) >= 2:
            i, j = hull[-2], hull[-1]
            if (x[j] - x[i]) * (y[k] - y[i]) - (y[j] - y[i]) * (x[k] - x[i]) <= 0:
                hull.pop()
            else:
                break
        hull.append(k)
    return np.array(hull, dtype=np.int64)


def _llt_row(x, f, xi):
    """Conjugate of one row of finite samples ``f`` at slopes ``xi``; also the argmax."""
    fin = np.flatnonzero(np.isfinite(f))
    if len(fin) == 0:
        return np.full(len(xi), -np.inf), np.zeros(len(xi), dtype=np.int64)
    xs, fs = x[fin], f[fin]
    hv = _lower_hull(xs, fs)
    slopes = np.diff(fs[hv]) / np.diff(xs[hv]) if len(hv) > 1 else np.empty(0)
    pos = np.searchsorted(slopes, xi)
    vals = np.empty(len(xi))
    arg = np.empty(len(xi), dtype=np.int64)
    h_min = np.min(np.diff(xs)) if len(xs) > 1 else 1.0
    scale = np.max(np.abs(xs)) * np.abs(xi) + np.max(np.abs(fs))
    tol = 64 * np.finfo(float).eps * scale / h_min
    for m, (p, t) in enumerate(zip(pos, xi)):
        lo_v, hi_v = max(p - 1, 0), min(p + 1, len(hv) - 1)
        near = False
        if p > 0 and abs(t - slopes[p - 1]) <= tol[m]:
            near = True
        if p < len(slopes) and abs(t - slopes[p]) <= tol[m]:
            near = True
        if near:
            cand = np.arange(hv[lo_v], hv[hi_v] + 1)
        else:
            cand = hv[lo_v:hi_v + 1]
        cv = t * xs[cand] - fs[cand]
        j = int(np.argmax(cv))
        vals[m] = cv[j]
        arg[m] = fin[cand[j]]
    return vals, arg


def _pass_llt(x, g, xi, bnd):
    lead = g.shape[:-1]
    rows = g.reshape(-1, g.shape[-1])
    brows = None if bnd is None else bnd.reshape(-1, g.shape[-1])
    out = np.empty((len(rows), len(xi)))
    flag = np.empty((len(rows), len(xi)), dtype=bool)
    n = len(x)
    for r, row in enumerate(rows):
        vals, arg = _llt_row(x, -row, xi)
        out[r] = vals
        b = (arg == 0) | (arg == n - 1)
        if brows is not None:
            b |= brows[r][arg]
        flag[r] = b
    return out.reshape(lead + (len(xi),)), flag.reshape(lead + (len(xi),))


def _conj_direct(f, dual):
    X = f.spec.nodes().reshape(-1, f.dim)
    fv = f.values.ravel()
    keep = np.isfinite(fv)
    X, fv = X[keep], fv[keep]
    bidx = np.stack(np.meshgrid(*[np.arange(k) for k in f.spec.counts], indexing="ij"), -1)
    bidx = bidx.reshape(-1, f.dim)[keep]
    on_b = np.any((bidx == 0) | (bidx == np.array(f.spec.counts) - 1), axis=-1)
    Xi = dual.nodes().reshape(-1, dual.dim)
    out = np.empty(len(Xi))
    flag = np.empty(len(Xi), dtype=bool)
    step = max(1, _CHUNK_ELEMS // max(1, len(X)))
    for k0 in range(0, len(Xi), step):
        sl = slice(k0, k0 + step)
        v = Xi[sl] @ X.T - fv[None, :]
        idx = np.argmax(v, axis=-1)
        out[sl] = v[np.arange(len(idx)), idx]
        flag[sl] = on_b[idx]
    return out.reshape(dual.shape), flag.reshape(dual.shape)


def conjugate_grid(f, dual, method="separable"):
    """Discrete conjugate of ``f`` at the nodes of ``dual``.

    Parameters
    ----------
    f : GridFunction
        Samples with at least one finite value.  ``+inf`` nodes are left
        out of the maximum; a single ``-inf`` node makes the conjugate
        identically ``+inf`` and sets the ``neg_inf_poisoned`` flag.
    dual : GridSpec
    method : {"separable", "direct", "llt"}

    Returns
    -------
    GridFunction
        Values on ``dual`` with ``boundary_argmax`` marking dual nodes whose
        maximizer sits on the primal box boundary.
    """
    if _check(f, dual) == "poison":
        return GridFunction(dual, np.full(dual.shape, np.inf), frozenset({POISON_FLAG}))
    if method == "direct":
        vals, flag = _conj_direct(f, dual)
        return GridFunction(dual, vals, boundary_argmax=flag)
    if method not in ("separable", "llt"):
        raise ValueError(f"unknown method {method!r}")
    step = _pass_brute if method == "separable" else _pass_llt
    g = -f.values
    bnd = None
    paxes, daxes = f.spec.axes(), dual.axes()
    for a in range(f.dim):
        g = np.moveaxis(g, a, -1)
        if bnd is not None:
            bnd = np.moveaxis(bnd, a, -1)
        g, bnd = step(paxes[a], g, daxes[a], bnd)
        g = np.moveaxis(g, -1, a)
        bnd = np.moveaxis(bnd, -1, a)
    return GridFunction(dual, np.ascontiguousarray(g), boundary_argmax=np.ascontiguousarray(bnd))


def biconjugate_grid(f, dual, method="separable"):
    """Conjugate applied twice, returned on the primal grid of ``f``.

    The result never exceeds ``f`` in exact arithmetic; the largest observed
    excess (rounding) is stored in ``slack``.  A ``-inf`` node makes the
    biconjugate identically ``-inf`` (flagged).
    """
    conj = conjugate_grid(f, dual, method)
    if POISON_FLAG in conj.flags:
        return GridFunction(f.spec, np.full(f.spec.shape, -np.inf),
                            frozenset({POISON_FLAG, "biconjugate_neg_inf"}))
    bi = conjugate_grid(conj, f.spec, method)
    fin = np.isfinite(f.values)
    slack = float(np.max(bi.values[fin] - f.values[fin], initial=0.0))
    return GridFunction(f.spec, bi.values, bi.flags, bi.boundary_argmax, max(slack, 0.0))


def slope_dual_spec(f, counts=None, pad=0.1, align=True):
    """Dual grid covering the finite-difference slopes of ``f``, padded by ``pad``.

    With ``align`` the smallest and largest realized slope on each axis are
    grid nodes, so piecewise-linear data is conjugated without slope loss.
    """
    spec = f.spec
    counts = tuple(np.atleast_1d(counts if counts is not None else spec.counts).astype(int))
    if len(counts) == 1 and spec.dim > 1:
        counts = counts * spec.dim
    lower, upper, ncount = [], [], []
    for a in range(spec.dim):
        v = np.moveaxis(f.values, a, -1)
        with np.errstate(invalid="ignore"):
            d = np.diff(v, axis=-1) / spec.spacing[a]
        d = d[np.isfinite(d)]
        if d.size == 0:
            lo, hi = -1.0, 1.0
        else:
            lo, hi = float(d.min()), float(d.max())
        m = counts[a]
        width = hi - lo
        if width <= 0 or not align:
            w = width if width > 0 else max(1.0, abs(lo))
            lower.append(lo - pad * w)
            upper.append(hi + pad * w)
            ncount.append(m)
            continue
        k = max(1, int(round((m - 1) / (1 + 2 * pad))))
        padn = max(1, (m - 1 - k) // 2)
        delta = width / k
        lower.append(lo - padn * delta)
        upper.append(hi + padn * delta)
        ncount.append(k + 1 + 2 * padn)
    return GridSpec(tuple(lower), tuple(upper), tuple(ncount))


def grid_tolerance(primal, dual):
    """Discretization scale of a grid conjugate: primal spacing times the largest dual slope."""
    h = max(primal.spacing)
    xi_max = max(max(abs(a), abs(b)) for a, b in zip(dual.lower, dual.upper))
    return h * max(1.0, xi_max)


def oracle_biconjugate(f, spec, dual=None, dual_counts=None):
    """Sample a Func on ``spec`` and return its grid biconjugate."""
    gf = sample(f, spec)
    dual = dual or slope_dual_spec(gf, dual_counts)
    return biconjugate_grid(gf, dual)


def recession_numeric_batch(f, directions, basepoint, t_max=2.0 ** 16, threshold=1e8):
    """Vectorized :func:`recession_numeric` over an array of directions."""
    d, shape = as_points(directions, f.dim)
    b, _ = as_points(basepoint, f.dim)
    b = b[0]
    fb = float(f(b))
    if not math.isfinite(fb):
        raise BasepointOutsideDomain("basepoint is outside dom f")
    ladder = 2.0 ** np.arange(0, int(round(math.log2(t_max))) + 1)
    q = np.empty((len(ladder), len(d)))
    for i, t in enumerate(ladder):
        with np.errstate(invalid="ignore"):
            q[i] = (f(b + t * d) - fb) / t
    zero = np.all(d == 0, axis=-1)
    last, prev = q[-1], q[-2]
    with np.errstate(invalid="ignore", divide="ignore"):
        growth = np.where(prev != 0, (last - prev) / np.abs(prev), np.where(last > prev, np.inf, 0.0))
    div = np.any(q > threshold, axis=0) | ~np.isfinite(last) | (growth > 0.01)
    out = np.where(div, np.inf, last)
    out[zero] = 0.0
    return out.reshape(shape)


def recession_numeric(f, direction, basepoint, t_max=2.0 ** 16):
    """Recession function of a convex proper ``f`` in ``direction``.

    Ray quotients ``(f(b + t d) - f(b)) / t`` on the doubling ladder
    ``t = 1, 2, ..., t_max``; +inf when a quotient exceeds 1e8 or is still
    growing by more than 1% at ``t_max``.  When ``f`` exposes an analytic
    recession function (support function of the conjugate's domain) the two
    can be compared with :func:`certify_recession`.
    """
    return float(recession_numeric_batch(f, np.atleast_1d(np.asarray(direction, float))[None, ...]
                                         if f.dim > 1 else np.atleast_1d(direction),
                                         basepoint, t_max).ravel()[0])


def certify_recession(f, direction, basepoint, t_max=2.0 ** 16, rtol=1e-3):
    """Compare the ray-limit recession value with the analytic one, when available."""
    num = recession_numeric(f, direction, basepoint, t_max)
    ana = f.recession(np.asarray(direction, dtype=float))
    if ana is None:
        return {"numeric": num, "analytic": None, "agree": None}
    ana = float(ana)
    if math.isinf(ana) or math.isinf(num):
        agree = ana == num
    else:
        agree = abs(ana - num) <= rtol * max(1.0, abs(ana))
    return {"numeric": num, "analytic": ana, "agree": agree}


def hull_of_positive_set(s, spec):
    """Hull of ``{s > 0}`` from grid samples (dimension 1 or 2).

    Positive nodes are joined by the zero crossings of ``s`` on segments
    to finite nonpositive neighbours (diagonals included), so a boundary where ``s``
    decreases continuously to 0 is located to interpolation accuracy.
    Sides of the box reached by positive nodes become unbounded flags.
    """
    if spec.dim > 2:
        raise DimensionMismatch("hulls are implemented for dimension 1 and 2")
    gf = sample(s, spec)
    v = gf.values
    pos = (v > 0) & np.isfinite(v)
    nodes = spec.nodes()
    pts = [nodes[pos]]
    d = spec.dim
    for off in itertools.product((-1, 0, 1), repeat=d):
        if not any(off):
            continue
        src = tuple(slice(max(0, -o), v.shape[i] - max(0, o)) for i, o in enumerate(off))
        dst = tuple(slice(max(0, o), v.shape[i] - max(0, -o)) for i, o in enumerate(off))
        p_v, q_v = v[src], v[dst]
        m = (p_v > 0) & np.isfinite(p_v) & np.isfinite(q_v) & (q_v <= 0)
        if np.any(m):
            t = (p_v[m] / (p_v[m] - q_v[m]))[:, None]
            p_n, q_n = nodes[src][m], nodes[dst][m]
            pts.append(p_n + t * (q_n - p_n))
    pts = np.concatenate(pts, axis=0)
    touched = {}
    for a in range(spec.dim):
        pa = np.moveaxis(pos, a, 0)
        touched[(a, -1)] = bool(np.any(pa[0]))
        touched[(a, 1)] = bool(np.any(pa[-1]))
    return hull_from_points(pts, spec.dim, touched=touched)


@dataclass
class ConvergenceReport:
    spacings: list
    sup_errors: list
    empirical_order: list
    against_reference: bool = False
    extra: dict = field(default_factory=dict)

    def to_json(self):
        def clean(v):
            return None if v is None or not math.isfinite(v) else v
        return json.dumps({"spacings": self.spacings,
                           "sup_errors": [clean(e) for e in self.sup_errors],
                           "empirical_order": [clean(o) for o in self.empirical_order]},
                          sort_keys=True)


def oracle_convergence(f, specs, reference=None, dual_counts=None, margin=0.1):
    """Refinement sweep of the grid biconjugate of ``f``.

    Parameters
    ----------
    f : Func
    specs : list of GridSpec
        Strictly decreasing spacing.
    reference : callable, optional
        Exact values; when given, errors are measured against it at every
        level, otherwise between successive levels.
    margin : float
        Fraction of the box width excluded next to each box face.

    Returns
    -------
    ConvergenceReport
        Errors are sup norms over nodes of the coarsest grid that are
        interior and finite at every level.
    """
    h = [max(s.spacing) for s in specs]
    if any(b >= a for a, b in zip(h, h[1:])):
        raise ValueError("specs must have strictly decreasing spacing")
    base = specs[0]
    pts = base.nodes().reshape(-1, base.dim)
    inner = np.ones(len(pts), dtype=bool)
    for a in range(base.dim):
        w = base.upper[a] - base.lower[a]
        inner &= (pts[:, a] >= base.lower[a] + margin * w) & (pts[:, a] <= base.upper[a] - margin * w)
    pts = pts[inner]
    vals = []
    for s in specs:
        bi = oracle_biconjugate(f, s, dual_counts=dual_counts)
        vals.append(GridBacked(bi)(pts))
    vals = np.array(vals)
    ok = np.all(np.isfinite(vals), axis=0)
    if reference is not None:
        ref = np.asarray(reference(pts), dtype=float)
        ok &= np.isfinite(ref)
        errs = [float(np.max(np.abs(v[ok] - ref[ok]), initial=0.0)) for v in vals]
        hs = h
    else:
        errs = [float(np.max(np.abs(vals[i][ok] - vals[i + 1][ok]), initial=0.0))
                for i in range(len(specs) - 1)]
        hs = h[:-1]
    orders = []
    for i in range(len(errs) - 1):
        if errs[i] > 0 and errs[i + 1] > 0:
            orders.append(math.log(errs[i] / errs[i + 1]) / math.log(hs[i] / hs[i + 1]))
        else:
            orders.append(None)
    return ConvergenceReport(h, errs, orders, reference is not None)
