"""Property checks shared by the test modules."""

import numpy as np


def midpoint_violations(f, pts, rng, n=1000, tol=1e-9):
    """Count midpoint convexity violations of ``f`` over ``n`` random pairs.

    ``pts`` is a pool of candidate points; pairs are drawn among those where
    ``f`` is finite, so midpoints stay in the (convex) domain.
    """
    vals = np.asarray(f(pts), dtype=float)
    pool = pts[np.isfinite(vals)]
    if len(pool) < 2:
        raise ValueError("no finite points to test")
    i = rng.integers(0, len(pool), n)
    j = rng.integers(0, len(pool), n)
    a, b = pool[i], pool[j]
    fa, fb = np.asarray(f(a), float), np.asarray(f(b), float)
    fm = np.asarray(f((a + b) / 2), float)
    bound = (fa + fb) / 2
    scale = np.maximum(1.0, np.abs(bound))
    return int(np.sum(~(fm <= bound + tol * scale)))


def boundary_points(f, pts, rng, n=100, iters=60):
    """Points on the boundary of ``dom f`` found by bisection, with an inner anchor each.

    The returned points are the last finite iterates, so they lie in the
    domain and within rounding of its boundary.  Both arrays are empty when
    ``f`` is finite on the whole pool.
    """
    vals = np.asarray(f(pts), dtype=float)
    inside, outside = pts[np.isfinite(vals)], pts[~np.isfinite(vals)]
    if len(outside) == 0:
        return pts[:0], pts[:0]
    a = inside[rng.integers(0, len(inside), n)]
    b = outside[rng.integers(0, len(outside), n)]
    for _ in range(iters):
        m = (a + b) / 2
        fin = np.isfinite(np.asarray(f(m), float))
        a = np.where(fin[:, None], m, a)
        b = np.where(fin[:, None], b, m)
    anchors = inside[rng.integers(0, len(inside), n)]
    return a, anchors


def lsc_ladder_failures(f, base, anchors, rungs=5, tol=1e-7):
    """Count boundary points where the value exceeds the liminf along a 5-point ladder.

    Rungs sit at ``base + t (anchor - base)`` with ``t = 10^-2 ... 10^-6``.
    The liminf is estimated by the last rung plus the geometric tail of the
    rung increments; a rising ladder whose increments do not shrink is taken
    to diverge.  A value of +inf at the
    base requires the ladder to grow or be infinite.
    """
    ts = 10.0 ** -np.arange(2, 2 + rungs)
    ladder = np.stack([np.asarray(f(base + t * (anchors - base)), float) for t in ts])
    v0 = np.asarray(f(base), float)
    fails = 0
    for k in range(len(base)):
        g = ladder[:, k]
        if not np.isfinite(v0[k]):
            if np.all(np.isfinite(g)) and not g[-1] > g[0]:
                fails += 1
            continue
        if np.any(np.isinf(g) & (g < 0)):
            fails += 1
            continue
        fin = g[np.isfinite(g)]
        if fin.size < 2:
            continue
        inc = np.diff(fin)
        if fin.size >= 3 and inc[-1] > 0 and inc[-1] >= 0.5 * inc[-2] > 0:
            # increments do not shrink: the ladder diverges, liminf is +inf
            continue
        # geometric tail of the increments; 1/9 is the linear-convergence ratio
        r = 0.1
        if fin.size >= 3 and inc[-2] != 0:
            r = min(abs(inc[-1] / inc[-2]), 0.9)
        slack = abs(inc[-1]) * max(r / (1 - r), 1 / 9)
        if v0[k] > fin[-1] + slack + tol * max(1.0, abs(v0[k])):
            fails += 1
    return fails
