"""Preperspective, perspective and the conjugate of the preperspective.

For a function ``phi`` on X and a scaling ``s`` on Y the preperspective is
``s(y) phi(x / s(y))`` where ``0 < s(y) < inf`` and +inf elsewhere; the
perspective is its largest lsc convex minorant.  Closed forms are selected
from the sign pattern of ``phi*`` and from the envelopes of ``s``:

========== ==================================================================
tag        formula (``u = s▲(y)``, ``d = (-s)▼(y)``, ``h`` the closed hull of phi)
========== ==================================================================
T55_i      ``u h(x/u)`` for ``0 < u < inf``, ``rec h(x)`` for ``u = 0``
T55_ii     ``rec h(x) + indicator(conv S)(y)``
T55_iiia   ``support((phi*)^-1(0))(x) + indicator(conv S)(y)``
T55_iiib   ``-d h(x/-d)`` for ``d < 0``, ``rec h(x)`` for ``d = 0``
T55_va     T55_i with ``h`` replaced by its down part ``phi*▼*``
T55_vb     max of the down part scaled by ``u`` and the up part scaled by ``-d``
C305_i     ``s h(x/s)`` on ``0 < s < inf``, ``rec h(x)`` on ``conv S`` where ``s <= 0``
C305_ii    ``h(x) + indicator(conv S)(y)``
C305_iii   ``s h(x/s)`` on ``s > 0``, ``rec h(x)`` on ``s = 0``
Affine_Ex51 same formula as C305_iii for an affine scaling
========== ==================================================================

The tags are stable identifiers; every case not listed evaluates to +inf.
"""

import functools
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.ndimage import binary_erosion

from . import __version__ as _VERSION
from .envelopes import envelope_down, envelope_up, restrict_up
from .errors import (DimensionMismatch, EmptyNegativeSet, EmptyPositiveSet, GridRequired,
                     HypothesisViolated, UnknownConjugate)
from .extreal import to_json_value
from .funcs.core import Func, Meta, Negated, as_points
from .funcs.families import Affine
from .funcs.grid import GridBacked, GridFunction, GridSpec, sample
from .transform import (biconjugate_grid, conjugate_grid, hull_of_positive_set,
                        recession_numeric_batch, slope_dual_spec)

THEOREM_TAGS = ("T55_i", "T55_ii", "T55_iiia", "T55_iiib", "T55_va", "T55_vb")
SPECIAL_TAGS = ("C305_i", "C305_ii", "C305_iii", "Affine_Ex51")
ORACLE_TAG = "Oracle"
DEGENERATE_TAG = "Degenerate"

WITNESS_FACTOR = 10.0


# ---------------------------------------------------------------------------
# phi in grid mode


class GridHull(Func):
    """Closed convex hull of ``phi`` realized as a grid biconjugate.

    Dual nodes whose maximizer sits on the primal box boundary are treated
    as outside ``dom phi*``; the remaining nodes stand for the conjugate's
    domain in every hook (recession, sign scan, zero set, parts).
    """

    def __init__(self, phi, grid, dual=None):
        if grid is None:
            raise GridRequired("phi has no analytic conjugate; supply a primal grid")
        self.phi, self.grid, self.dim = phi, grid, phi.dim
        gf = sample(phi, grid)
        self.dual = dual or slope_dual_spec(gf)
        conj = conjugate_grid(gf, self.dual)
        self.valid = ~conj.boundary_argmax & np.isfinite(conj.values)
        if not np.any(self.valid):
            raise UnknownConjugate("no dual node of the grid conjugate is reliable")
        self.conj_values = np.where(self.valid, conj.values, np.inf)
        self._conj = GridFunction(self.dual, self.conj_values)
        self.biconj = conjugate_grid(self._conj, grid)
        self._bi = GridBacked(self.biconj)
        self.tolerance = _curvature_tolerance(self.biconj)
        self.meta = Meta(convex=True, lsc=True, proper=True, family=f"GridHull[{phi.family}]")
        self._nodes = self.dual.nodes()[self.valid]
        self._cvals = self.conj_values[self.valid]

    def _eval(self, pts):
        return self._bi._eval(pts)

    def params(self):
        return {"grid": self.grid.to_dict(), "dual": self.dual.to_dict()}

    def conjugate(self):
        return GridBacked(self._conj)

    def _support(self, nodes, x):
        pts, shape = as_points(x, self.dim)
        if len(nodes) == 0:
            return np.full(shape, -np.inf)
        return np.max(pts @ nodes.T, axis=1).reshape(shape)

    def recession(self, x):
        return self._support(self._nodes, x)

    def conjugate_inf(self):
        return float(np.min(self._cvals))

    def conjugate_sup(self):
        return float(np.max(self._cvals))

    def zero_set_support(self, x):
        zero = np.abs(self._cvals) <= WITNESS_FACTOR * self.tolerance
        if not np.any(zero):
            return None
        return self._support(self._nodes[zero], x)

    def _part(self, keep):
        vals = np.where(self.valid & keep, self.conj_values, np.inf)
        if not np.any(np.isfinite(vals)):
            return None
        return _GridPart(GridFunction(self.dual, vals), self.grid, self.dual)

    def down_part(self):
        return self._part(self.conj_values < 0)

    def up_part(self):
        return self._part(self.conj_values > 0)

    def conjugate_witnesses(self):
        i, j = int(np.argmin(self._cvals)), int(np.argmax(self._cvals))
        return [self._nodes[i], self._nodes[j]]


class _GridPart(Func):
    """Conjugate of a restricted grid conjugate, with its recession from the kept nodes."""

    def __init__(self, conj, grid, dual):
        self.dim = grid.dim
        self._nodes = dual.nodes()[np.isfinite(conj.values)]
        self._bi = GridBacked(conjugate_grid(conj, grid))
        self.meta = Meta(convex=True, lsc=True, proper=True, family="GridPart")

    def _eval(self, pts):
        return self._bi._eval(pts)

    def recession(self, x):
        pts, shape = as_points(x, self.dim)
        return np.max(pts @ self._nodes.T, axis=1).reshape(shape)


def _curvature_tolerance(gf):
    """A quarter of the largest second difference of the samples.

    Between two nodes a convex function deviates from its chord by at most
    this amount, which bounds the gap between the node maximum and the
    continuous maximum defining the conjugate.
    """
    worst = 0.0
    for a in range(gf.dim):
        v = np.moveaxis(gf.values, a, -1)
        with np.errstate(invalid="ignore"):
            d2 = v[..., 2:] - 2 * v[..., 1:-1] + v[..., :-2]
        d2 = np.abs(d2[np.isfinite(d2)])
        if d2.size:
            worst = max(worst, float(d2.max()))
    return worst / 4.0


def _phi_hull(phi, grid=None, dual=None):
    """``(hull, route)``: the analytic closed hull when it has a conjugate, else a grid hull."""
    h = phi.closed_hull()
    if h is not None and h.conjugate() is not None:
        return h, "analytic"
    if grid is None:
        raise UnknownConjugate("no analytic conjugate for phi and no grid supplied")
    return GridHull(phi, grid, dual), "grid"


def _recession_fn(g):
    """Callable ``x -> rec g(x)``, analytic when available, ray limits otherwise."""
    def rec(x):
        v = g.recession(x)
        if v is not None:
            return np.asarray(v, dtype=float)
        info = g.infimum()
        base = info[1] if info is not None and info[1] is not None else np.zeros(g.dim)
        return recession_numeric_batch(g, x, base)
    return rec


# ---------------------------------------------------------------------------
# sign classification


@dataclass(frozen=True)
class ConjugateSignClass:
    """Sign pattern of ``phi*`` over its domain.

    ``variant`` is one of NonPositive, ZeroInfty, NonNegative, Mixed.
    ``infimum`` equals ``-h(0)`` for the closed hull ``h``; ``supremum`` is
    the sup over ``dom phi*``.  Witnesses are ``(point, value)`` pairs.
    """

    variant: str
    strict_negative: bool
    strict_positive: bool
    zero_attained: bool
    infimum: float
    supremum: float
    margin: float = 0.0
    route: str = "analytic"
    witnesses: tuple = ()

    @property
    def nonpositive_somewhere(self):
        """Whether ``(phi*)^-1(]-inf, 0])`` is nonempty."""
        return self.strict_negative or self.zero_attained or self.variant == "ZeroInfty"

    def to_dict(self):
        return {"variant": self.variant, "strict_negative": self.strict_negative,
                "strict_positive": self.strict_positive, "zero_attained": self.zero_attained,
                "infimum": to_json_value(self.infimum), "supremum": to_json_value(self.supremum),
                "margin": self.margin, "route": self.route,
                "witnesses": [{"point": [float(c) for c in np.atleast_1d(p)],
                               "value": to_json_value(v)} for p, v in self.witnesses]}


def _classify_hull(h, route):
    conj = h.conjugate()
    margin = WITNESS_FACTOR * h.tolerance if route == "grid" else 0.0
    if route == "grid":
        inf_c = h.conjugate_inf()
    else:
        inf_c = -float(h(np.zeros(h.dim)))
    points = [np.atleast_1d(np.asarray(p, dtype=float)) for p in h.conjugate_witnesses()]
    values = [float(conj(p if h.dim > 1 else p[0])) for p in points]
    sup_c = h.conjugate_sup()
    if sup_c is None:
        finite = [v for v in values if math.isfinite(v)]
        sup_c = max(finite) if finite else -math.inf
    neg = inf_c < -margin
    pos = sup_c > margin
    tol = max(margin, 1e-12 * max(1.0, abs(inf_c)) if math.isfinite(inf_c) else 0.0)
    attained = (abs(inf_c) <= margin) and any(abs(v - inf_c) <= tol for v in values)
    if neg and pos:
        variant = "Mixed"
    elif neg:
        variant = "NonPositive"
    elif pos:
        variant = "NonNegative"
    else:
        variant = "ZeroInfty"
    wit = tuple((p, v) for p, v in zip(points, values)
                if (v < -margin) or (v > margin) or (math.isfinite(v) and abs(v) <= margin))
    return ConjugateSignClass(variant, neg, pos, attained, inf_c, sup_c, margin, route, wit)


def classify_phi_star(phi, grid=None, dual=None):
    """Sign class of ``phi*``.

    Uses the analytic conjugate when the family stores one; otherwise the
    grid conjugate on ``grid`` (witnesses need a margin of ten grid
    tolerances).

    Raises
    ------
    UnknownConjugate
        Neither an analytic conjugate nor a grid is available.
    """
    h, route = _phi_hull(phi, grid, dual)
    return _classify_hull(h, route)


# ---------------------------------------------------------------------------
# scaling side


@dataclass
class ScalingModel:
    """Everything the formulas need from ``s``."""

    s: Func
    hull: object
    up: Func
    neg_down: Optional[Func]
    cam_neg: Optional[bool]
    up_conjugate: object
    neg_down_conjugate: object
    route: str = "analytic"


def _grid_conjugate_fn(restricted, grid):
    gf = sample(restricted, grid)
    if not np.any(np.isfinite(gf.values)):
        return lambda t: np.full(np.shape(np.asarray(t, float))[:1] or (), np.inf)
    dual = slope_dual_spec(gf)
    conj = conjugate_grid(gf, dual)
    vals = np.where(conj.boundary_argmax, np.inf, conj.values)
    back = GridBacked(GridFunction(dual, vals))
    return back


def scaling_model(s, grid=None):
    """Analytic envelopes of ``s`` when its family stores them, grid envelopes otherwise."""
    route = "analytic"
    hull = s.positive_hull()
    if hull is None:
        if grid is None:
            raise EmptyPositiveSet("s has no analytic positive set; supply a scaling grid")
        hull = hull_of_positive_set(s, grid)
        route = "grid"
    up = s.up_envelope()
    if up is None:
        up = envelope_up(s, grid).handle
        route = "grid"
    cam = s.cam_neg_restricted()
    if cam is None and s.meta.neg_gamma0:
        cam = True
    neg_down = s.neg_down_envelope()
    if neg_down is None and cam is not False and grid is not None:
        try:
            res = envelope_down(Negated(s), grid)
            neg_down = res.handle
            if not res.cam_empty:
                cam = True
            route = "grid"
        except EmptyNegativeSet:
            neg_down = None
    up_conj = s.up_conjugate if s.up_conjugate(np.zeros(s.dim)) is not None else None
    if up_conj is None:
        if grid is None:
            raise GridRequired("no analytic conjugate of the up part of s; supply a scaling grid")
        up_conj = _grid_conjugate_fn(restrict_up(s), grid)
    nd_probe = s.neg_down_conjugate(np.zeros(s.dim))
    if nd_probe is not None or cam is False:
        nd_conj = s.neg_down_conjugate
    elif grid is not None:
        nd_conj = _grid_conjugate_fn(_NegPart(s), grid)
    else:
        nd_conj = None
    return ScalingModel(s, hull, up, neg_down, cam, up_conj, nd_conj, route)


class _NegPart(Func):
    """``(-s)∨``: ``-s`` where ``0 < s < inf``."""

    def __init__(self, s):
        self.s, self.dim = s, s.dim

    def _eval(self, pts):
        v = self.s._eval(pts)
        return np.where((v > 0) & (v < np.inf), -v, np.inf)


# ---------------------------------------------------------------------------
# evaluation helpers


def _split(x, y, dx, dy):
    px, sx = as_points(x, dx)
    py, sy = as_points(y, dy)
    if sx != sy:
        try:
            shape = np.broadcast_shapes(sx, sy)
        except ValueError:
            raise DimensionMismatch(f"batch shapes {sx} and {sy} do not broadcast") from None
        px = np.broadcast_to(px.reshape(sx + (dx,)), shape + (dx,)).reshape(-1, dx)
        py = np.broadcast_to(py.reshape(sy + (dy,)), shape + (dy,)).reshape(-1, dy)
        sx = shape
    return px, py, sx


def _finish(out, shape):
    out = out.reshape(shape)
    return float(out) if out.ndim == 0 else out


def _scaled(g, rec, t, x):
    """``t g(x/t)`` for ``0 < t < inf``, ``rec g(x)`` for ``t = 0``, +inf otherwise."""
    out = np.full(len(t), np.inf)
    pos = (t > 0) & (t < np.inf)
    if np.any(pos):
        out[pos] = t[pos] * np.atleast_1d(g(x[pos] / t[pos, None]))
    zero = t == 0
    if np.any(zero):
        out[zero] = np.atleast_1d(rec(x[zero]))
    return out


def _values(f, pts):
    return np.atleast_1d(np.asarray(f(pts), dtype=float))


def preperspective_eval(phi, s, x, y):
    """``s(y) phi(x/s(y))`` if ``0 < s(y) < inf``, else +inf.

    ``x`` and ``y`` are points (or batches with matching leading shape) of
    dimension ``phi.dim`` and ``s.dim``.
    """
    px, py, shape = _split(x, y, phi.dim, s.dim)
    sv = _values(s, py)
    out = np.full(len(sv), np.inf)
    ok = (sv > 0) & (sv < np.inf)
    if np.any(ok):
        out[ok] = sv[ok] * _values(phi, px[ok] / sv[ok, None])
    return _finish(out, shape)


def _probe_grid(dim, grid):
    return grid or GridSpec((-10.0,) * dim, (10.0,) * dim, (41,) * dim)


def preperspective_properness(phi, s, grid=None, scaling_grid=None):
    """Proper iff ``phi`` is proper and ``S = {s > 0}`` is nonempty.

    Unknown metadata is settled by sampling on the supplied grids (or a
    default box ``[-10, 10]^d``); sampling can only confirm, so an
    unsuccessful probe reports False.
    """
    proper = phi.meta.proper
    if proper is None:
        v = sample(phi, _probe_grid(phi.dim, grid)).values
        proper = bool(np.any(np.isfinite(v))) and not np.any(v == -np.inf)
    if not proper:
        return False
    if s.positive_hull() is not None:
        return True
    if isinstance(s, Affine):
        return False
    v = sample(s, _probe_grid(s.dim, scaling_grid)).values
    return bool(np.any((v > 0) & (v < np.inf)))


def convexity_conditions(phi, s, rng=None, n=1000):
    """Status of the three sufficient conditions for a convex preperspective.

    Returns a dict ``{"P30_i": ..., "P30_ii": ..., "P30_iii": ...}`` with
    values True, False or None (undetermined).

    * ``P30_i``: ``s`` is affine.
    * ``P30_ii``: ``phi(0) <= 0`` and ``-s`` is proper and convex.
    * ``P30_iii``: ``phi(l x) <= l phi(x)`` for ``l > 1``; decided from the sign of
      ``phi*`` when the conjugate is known, else by a sampled test that can
      only refute.
    """
    out = {}
    if isinstance(s, Affine):
        out["P30_i"] = True
    elif s.meta.family == "Opaque":
        out["P30_i"] = None
    else:
        out["P30_i"] = False

    phi0 = float(phi(np.zeros(phi.dim)))
    if phi0 > 0:
        out["P30_ii"] = False
    elif s.meta.neg_convex is True and s.meta.neg_proper is True:
        out["P30_ii"] = True
    elif s.meta.neg_convex is False or s.meta.neg_proper is False:
        out["P30_ii"] = False
    else:
        out["P30_ii"] = None

    sup_c = phi.conjugate_sup() if phi.meta.gamma0 and phi.conjugate() is not None else None
    if sup_c is not None:
        out["P30_iii"] = bool(sup_c <= 0)
    else:
        rng = rng if rng is not None else np.random.default_rng(42)
        xs = rng.normal(scale=2.0, size=(n, phi.dim))
        lam = 1.0 + rng.exponential(scale=2.0, size=n)
        fx = _values(phi, xs)
        ok = np.isfinite(fx)
        flx = _values(phi, xs * lam[:, None])
        bad = ok & (flx > lam * fx + 1e-12 * np.maximum(1.0, np.abs(lam * fx)))
        out["P30_iii"] = False if np.any(bad) else None
    return out


def cam_status_neg_s(s, grid=None):
    """Whether ``(-s)∨`` admits a continuous affine minorant (None if undetermined)."""
    return scaling_model(s, grid).cam_neg


def cam_nonempty(phi, s, grid=None, dual=None, scaling_grid=None):
    """Whether the preperspective has a continuous affine minorant.

    True iff ``phi*`` is nonpositive somewhere or ``(-s)∨`` has an affine
    minorant; None when the first part fails and the second is undetermined.
    """
    sc = classify_phi_star(phi, grid, dual)
    if sc.nonpositive_somewhere:
        return True
    return scaling_model(s, scaling_grid).cam_neg


# ---------------------------------------------------------------------------
# the report


def _theorem_branch(sc, cam):
    v = sc.variant
    if v == "NonPositive":
        return "T55_i"
    if v == "ZeroInfty":
        return "T55_ii"
    if v == "NonNegative":
        if cam is True:
            return "T55_iiib"
        if cam is False:
            return "T55_iiia" if sc.zero_attained else DEGENERATE_TAG
        return ORACLE_TAG if sc.zero_attained else DEGENERATE_TAG
    if cam is True:
        return "T55_vb"
    if cam is False:
        return "T55_va"
    return ORACLE_TAG


def _special_branch(phi, s, sc, h):
    if not phi.meta.gamma0:
        return None
    if isinstance(s, Affine):
        return "Affine_Ex51"
    if sc.variant == "ZeroInfty":
        return "C305_ii"
    if sc.variant == "NonPositive" and s.meta.gamma0:
        return "C305_i"
    if float(h(np.zeros(h.dim))) <= 0 and s.meta.neg_gamma0:
        return "C305_iii"
    return None


class PerspectiveReport:
    """Classification of ``(phi, s)`` with closed-form evaluators.

    Attributes
    ----------
    branch : str
        Most specific applicable tag (specializations first).
    theorem_branch : str
        Tag of the general case analysis; agrees in value with ``branch``.
    sign_class : ConjugateSignClass
    cam : bool or None
        Whether the preperspective has a continuous affine minorant.
    cam_neg_s : bool or None
        Whether ``(-s)∨`` has one.
    degenerate : bool
        The perspective only takes the values -inf and +inf; evaluation raises.
    """

    def __init__(self, phi, s, grid=None, dual=None, scaling_grid=None, joint_grid=None):
        self.phi, self.s = phi, s
        self.dx, self.dy = phi.dim, s.dim
        self.joint_grid = joint_grid
        self.hypotheses = []
        proper = phi.meta.proper
        if proper is None:
            proper = preperspective_properness(phi, Affine(np.zeros(s.dim), 1.0), grid)
        self._check("phi_proper", proper)
        if not proper:
            raise HypothesisViolated("phi must be proper")
        self.hull, self.phi_route = _phi_hull(phi, grid, dual)
        self._check("phi_has_affine_minorant", True, route=self.phi_route)
        self.scaling = scaling_model(s, scaling_grid)
        self._check("positive_set_nonempty", True, route=self.scaling.route)
        self.sign_class = _classify_hull(self.hull, self.phi_route)
        self.cam_neg_s = self.scaling.cam_neg
        self.cam = True if self.sign_class.nonpositive_somewhere else self.cam_neg_s
        self.degenerate = self.cam is False
        self._check("nondegenerate", self.cam,
                    witness=[to_json_value(self.sign_class.infimum)])
        self.theorem_branch = DEGENERATE_TAG if self.degenerate else _theorem_branch(
            self.sign_class, self.cam_neg_s)
        special = None if self.degenerate else _special_branch(phi, s, self.sign_class, self.hull)
        self.branch = special or self.theorem_branch
        self._check("branch_hypotheses", self._verify_branch(self.branch), branch=self.branch)
        self.rec = _recession_fn(self.hull)
        self._down = self._up = None
        self._oracle = None
        self._json = None

    def _check(self, name, status, **extra):
        label = {True: "pass", False: "fail", None: "undetermined"}[status]
        self.hypotheses.append(dict(name=name, status=label, **extra))

    def _verify_branch(self, tag):
        sc, cam, s = self.sign_class, self.cam_neg_s, self.s
        checks = {
            "T55_i": sc.variant == "NonPositive",
            "T55_ii": sc.variant == "ZeroInfty",
            "T55_iiia": sc.variant == "NonNegative" and sc.zero_attained and cam is False,
            "T55_iiib": sc.variant == "NonNegative" and cam is True,
            "T55_va": sc.variant == "Mixed" and cam is False,
            "T55_vb": sc.variant == "Mixed" and cam is True,
            "C305_i": self.phi.meta.gamma0 and sc.variant == "NonPositive" and s.meta.gamma0,
            "C305_ii": self.phi.meta.gamma0 and sc.variant == "ZeroInfty",
            "C305_iii": (self.phi.meta.gamma0 and sc.variant != "ZeroInfty"
                         and float(self.hull(np.zeros(self.dx))) <= 0 and s.meta.neg_gamma0),
            "Affine_Ex51": self.phi.meta.gamma0 and isinstance(s, Affine),
        }
        return checks.get(tag)

    # parts of the closed hull for the mixed case
    def _parts(self):
        if self._down is None:
            down = self.hull.down_part() or self.phi.down_part()
            up = self.hull.up_part() or self.phi.up_part()
            if down is None or up is None:
                raise UnknownConjugate("phi stores no decomposition into down and up parts")
            self._down, self._up = down, up
        return self._down, self._up

    # evaluators --------------------------------------------------------
    def preperspective(self, x, y):
        return preperspective_eval(self.phi, self.s, x, y)

    def perspective(self, x, y, branch=None):
        """Closed-form perspective; ``branch`` forces a specific formula (debugging)."""
        tag = branch or self.branch
        if tag == DEGENERATE_TAG or (branch is None and self.degenerate):
            raise HypothesisViolated("the preperspective has no affine minorant: "
                                     "its hull takes only the values -inf and +inf")
        px, py, shape = _split(x, y, self.dx, self.dy)
        out = self._dispatch(tag, px, py)
        return _finish(out, shape)

    def _dispatch(self, tag, x, y):
        h, rec, sm = self.hull, self.rec, self.scaling
        n = len(x)
        if tag == ORACLE_TAG:
            return self._oracle_values(x, y)
        if tag in ("C305_i", "C305_iii", "Affine_Ex51"):
            sv = _values(self.s, y)
            t = np.where((sv > 0) & (sv < np.inf), sv, np.where(sv == 0, 0.0, np.inf))
            if tag == "C305_i":
                t = np.where((sv <= 0) & sm.hull.contains(y), 0.0, t)
            return _scaled(h, rec, t, x)
        if tag == "C305_ii":
            return np.where(sm.hull.contains(y), _values(h, x), np.inf)
        if tag == "T55_i":
            return _scaled(h, rec, _values(sm.up, y), x)
        if tag == "T55_ii":
            return np.where(sm.hull.contains(y), rec(x), np.inf)
        if tag == "T55_iiia":
            zs = h.zero_set_support(x)
            if zs is None:
                raise UnknownConjugate("no support function of the zero set of phi*")
            return np.where(sm.hull.contains(y), np.atleast_1d(zs), np.inf)
        if tag == "T55_iiib":
            return _scaled(h, rec, -self._neg_down(y), x)
        if tag == "T55_va":
            down, _ = self._parts()
            return _scaled(down, _recession_fn(down), _values(sm.up, y), x)
        if tag == "T55_vb":
            down, up = self._parts()
            u, d = _values(sm.up, y), self._neg_down(y)
            a = _scaled(down, _recession_fn(down), u, x)
            b = _scaled(up, _recession_fn(up), -d, x)
            out = np.maximum(a, b)
            both_zero = (u == 0) & (d == 0)
            if np.any(both_zero):
                out[both_zero] = rec(x[both_zero])
            bad = ~((u > 0) & (u < np.inf)) & ~((u == 0) & (d <= 0))
            out[bad] = np.inf
            return out
        raise ValueError(f"unknown branch {tag!r}")

    def _neg_down(self, y):
        if self.scaling.neg_down is None:
            raise UnknownConjugate("s has no down envelope of -s")
        return _values(self.scaling.neg_down, y)

    def _oracle_values(self, x, y):
        if self._oracle is None:
            if self.joint_grid is None:
                raise GridRequired("branch undetermined; the oracle route needs a joint grid")
            self._oracle = GridBacked(oracle_preperspective_biconjugate(
                self.phi, self.s, self.joint_grid))
        return _values(self._oracle, np.concatenate([x, y], axis=1))

    def preperspective_conjugate(self, xstar, ystar):
        """Conjugate of the preperspective at ``(xstar, ystar)``, by the sign of ``phi*(xstar)``."""
        px, py, shape = _split(xstar, ystar, self.dx, self.dy)
        c = _values(self.hull.conjugate(), px)
        sm = self.scaling
        out = np.full(len(c), np.inf)
        neg = (c < 0) & (c > -np.inf)
        if np.any(neg):
            a = -c[neg]
            out[neg] = a * _values_fn(sm.up_conjugate, py[neg] / a[:, None])
        zero = c == 0
        if np.any(zero):
            out[zero] = sm.hull.support(py[zero])
        pos = (c > 0) & (c < np.inf)
        if np.any(pos):
            if sm.neg_down_conjugate is None:
                raise UnknownConjugate("no conjugate of the negative part of -s")
            v = _values_fn(sm.neg_down_conjugate, py[pos] / c[pos, None])
            out[pos] = c[pos] * v
        return _finish(out, shape)

    def perspective_func(self):
        return Perspective(self)

    def to_dict(self):
        return {"branch": self.branch, "theorem_branch": self.theorem_branch,
                "sign_class": self.sign_class.to_dict(), "cam": self.cam,
                "cam_neg_s": self.cam_neg_s, "degenerate": self.degenerate,
                "phi": {"family": self.phi.family, "params": self.phi.params(),
                        "route": self.phi_route},
                "s": {"family": self.s.family, "params": self.s.params(),
                      "route": self.scaling.route, "positive_hull": self.scaling.hull.to_dict()},
                "hypotheses_checked": self.hypotheses, "version": _VERSION}

    def to_json(self):
        if self._json is None:
            self._json = json.dumps(self.to_dict(), sort_keys=True, default=_json_default)
        return self._json


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _values_fn(fn, pts):
    v = fn(pts if pts.shape[1] > 1 else pts[:, 0])
    return np.atleast_1d(np.asarray(v, dtype=float)).reshape(-1)


@functools.lru_cache(maxsize=64)
def _cached_report(phi, s, grid, dual, scaling_grid, joint_grid):
    return PerspectiveReport(phi, s, grid, dual, scaling_grid, joint_grid)


def perspective_report(phi, s, grid=None, dual=None, scaling_grid=None, joint_grid=None):
    """Classify ``(phi, s)`` and bundle the evaluators (cached per argument identity).

    Parameters
    ----------
    phi, s : Func
    grid, dual : GridSpec, optional
        Primal/dual grids for phi when it has no analytic conjugate.
    scaling_grid : GridSpec, optional
        Grid on Y for scalings without analytic envelopes.
    joint_grid : GridSpec, optional
        Grid on X x Y for the oracle route when the branch is undetermined.
    """
    return _cached_report(phi, s, grid, dual, scaling_grid, joint_grid)


def perspective_case(phi, s, **kw):
    return perspective_report(phi, s, **kw).branch


def perspective_eval(phi, s, x, y, branch=None, **kw):
    """Perspective of ``(phi, s)`` at ``(x, y)``.

    Raises
    ------
    HypothesisViolated
        The preperspective has no continuous affine minorant.
    """
    return perspective_report(phi, s, **kw).perspective(x, y, branch)


def preperspective_conjugate_eval(phi, s, xstar, ystar, **kw):
    return perspective_report(phi, s, **kw).preperspective_conjugate(xstar, ystar)


# ---------------------------------------------------------------------------
# joint-space views


class Preperspective(Func):
    """The preperspective as a function on the product space (coordinates ``x`` then ``y``)."""

    def __init__(self, phi, s):
        self.phi, self.s = phi, s
        self.dim = phi.dim + s.dim
        self.meta = Meta(family=f"Preperspective[{phi.family},{s.family}]")

    def _eval(self, pts):
        return np.atleast_1d(preperspective_eval(self.phi, self.s, pts[:, :self.phi.dim],
                                                 pts[:, self.phi.dim:]))


class Perspective(Func):
    """Closed-form perspective on the product space."""

    def __init__(self, report, branch=None):
        self.report, self.branch = report, branch
        self.dim = report.dx + report.dy
        self.meta = Meta(convex=True, lsc=True, family=f"Perspective[{report.branch}]")

    def _eval(self, pts):
        r = self.report
        return np.atleast_1d(r.perspective(pts[:, :r.dx], pts[:, r.dx:], self.branch))


def oracle_preperspective_biconjugate(phi, s, joint_grid, dual=None):
    """Grid biconjugate of the sampled preperspective on ``joint_grid``."""
    gf = sample(Preperspective(phi, s), joint_grid)
    dual = dual or slope_dual_spec(gf)
    return biconjugate_grid(gf, dual)


def oracle_preperspective_conjugate(phi, s, joint_grid, dual):
    """Grid conjugate of the sampled preperspective at the nodes of ``dual``."""
    return conjugate_grid(sample(Preperspective(phi, s), joint_grid), dual)


# ---------------------------------------------------------------------------
# the operations Delta_1 / Delta_2


@dataclass
class DeltaReport:
    kind: str
    delta: np.ndarray
    perspective: np.ndarray
    violations: int
    strict_gaps: int
    hypotheses: list = field(default_factory=list)

    def to_dict(self):
        return {"kind": self.kind, "violations": self.violations,
                "strict_gaps": self.strict_gaps, "hypotheses": self.hypotheses}


def delta_operation(phi, s, x, y, kind="delta2"):
    """``Delta_1`` / ``Delta_2`` of ``phi`` and ``s``.

    Both equal ``s phi(x/s)`` on ``0 < s < inf`` and ``rec phi(x)`` on
    ``s = 0``; for ``phi = rec phi`` the ``delta2`` variant is
    ``phi(x) + indicator(dom s)(y)`` instead.
    """
    h, _ = _phi_hull(phi)
    px, py, shape = _split(x, y, phi.dim, s.dim)
    sv = _values(s, py)
    sc = _classify_hull(h, "analytic")
    if kind == "delta2" and sc.variant == "ZeroInfty":
        return _finish(np.where(sv < np.inf, _values(h, px), np.inf), shape)
    t = np.where((sv > 0) & (sv < np.inf), sv, np.where(sv == 0, 0.0, np.inf))
    return _finish(_scaled(h, _recession_fn(h), t, px), shape)


def delta_comparison(phi, s, x, y, kind="delta2", atol=1e-12):
    """Compare ``Delta`` with the perspective at the given points.

    The defining hypotheses of ``Delta_2`` (``phi >= rec phi != phi`` and
    ``s`` proper lsc convex) or of ``Delta_1`` are recorded but not
    enforced; the operation itself needs ``phi`` proper lsc convex and
    ``s >= 0``.

    Raises
    ------
    HypothesisViolated
        ``phi`` is not certified proper lsc convex, or ``s`` takes a negative value.
    """
    if not phi.meta.gamma0:
        raise HypothesisViolated("phi must be certified proper, lsc and convex")
    _, py, _ = _split(x, y, phi.dim, s.dim)
    if np.any(_values(s, py) < 0):
        raise HypothesisViolated("s takes negative values")
    h, _ = _phi_hull(phi)
    sc = _classify_hull(h, "analytic")
    if kind == "delta2":
        ok = (sc.variant == "NonPositive" or sc.variant == "ZeroInfty") and s.meta.gamma0
        name = "phi_above_recession_and_s_convex"
    else:
        ok = sc.variant != "ZeroInfty" and float(h(np.zeros(h.dim))) <= 0 and s.meta.neg_gamma0
        name = "phi_nonpositive_at_origin_and_minus_s_convex"
    hyp = [{"name": name, "status": "pass" if ok else "fail"}]
    d = np.atleast_1d(delta_operation(phi, s, x, y, kind))
    p = np.atleast_1d(perspective_eval(phi, s, x, y))
    with np.errstate(invalid="ignore"):
        viol = d > p + atol * np.maximum(1.0, np.abs(np.where(np.isfinite(p), p, 0.0)))
        gaps = d < p - atol * np.maximum(1.0, np.abs(np.where(np.isfinite(d), d, 0.0)))
    return DeltaReport(kind, d, p, int(np.sum(viol)), int(np.sum(gaps)), hyp)


# ---------------------------------------------------------------------------
# closed form against the grid oracle


def interior_mask(domain, spec, margin):
    """Nodes of ``domain`` (boolean array on ``spec``) whose box neighbourhood of
    half-width ``margin`` lies in ``domain`` and inside the grid box."""
    k = [int(math.ceil(margin / h - 1e-9)) for h in spec.spacing]
    structure = np.ones([2 * kk + 1 for kk in k], dtype=bool)
    return binary_erosion(domain, structure, border_value=0)


@dataclass
class OracleComparison:
    max_error: float
    nodes_compared: int
    oracle: GridFunction
    closed_form: np.ndarray
    mask: np.ndarray

    def to_dict(self):
        return {"max_error": self.max_error, "nodes_compared": self.nodes_compared,
                "grid": self.oracle.spec.to_dict()}


def _max_error(a, b, mask):
    if not np.any(mask):
        return math.nan
    return float(np.max(np.abs(a[mask] - b[mask])))


def compare_perspective_with_oracle(phi, s, joint, dual=None, margin=0.2, branch=None, **kw):
    """Closed-form perspective against the grid biconjugate of the sampled preperspective.

    Errors are taken over nodes of ``joint`` at distance at least ``margin``
    from the boundary of the closed form's finite domain and from the box.
    """
    rep = perspective_report(phi, s, **kw)
    bi = oracle_preperspective_biconjugate(phi, s, joint, dual)
    nodes = joint.nodes().reshape(-1, joint.dim)
    closed = np.asarray(rep.perspective(nodes[:, :rep.dx], nodes[:, rep.dx:], branch))
    closed = closed.reshape(joint.shape)
    mask = interior_mask(np.isfinite(closed), joint, margin)
    return OracleComparison(_max_error(bi.values, closed, mask), int(mask.sum()), bi, closed, mask)


def compare_conjugate_with_oracle(phi, s, joint, dual, margin=0.2, **kw):
    """Closed-form conjugate of the preperspective against the grid conjugate.

    Dual nodes whose maximizer lies on the primal box boundary are left out
    (truncation can hide larger values there), as are nodes within
    ``margin`` of the edge of the remaining region.
    """
    rep = perspective_report(phi, s, **kw)
    conj = oracle_preperspective_conjugate(phi, s, joint, dual)
    nodes = dual.nodes().reshape(-1, dual.dim)
    closed = np.asarray(rep.preperspective_conjugate(nodes[:, :rep.dx], nodes[:, rep.dx:]))
    closed = closed.reshape(dual.shape)
    mask = interior_mask(np.isfinite(closed) & ~conj.boundary_argmax, dual, margin)
    return OracleComparison(_max_error(conj.values, closed, mask), int(mask.sum()), conj, closed, mask)
