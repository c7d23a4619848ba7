"""Application functionals: transport integrands, mean scalings, generalized Fisher information."""

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, GammaOutOfRange, ParameterOutOfRange
from .extreal import to_json_value
from .funcs.families import NormPowerShifted, RadialIndicator
from .funcs.grid import GridFunction, GridSpec
from .funcs.scalings import BrenierMobility, GeoMeanScaling, LogMeanScaling, PowerScaling
from .funcs.scalings import geo_mean, log_mean
from .perspective import perspective_report

__all__ = [
    "transport_phi", "transport_scaling", "transport_integrand_surface",
    "constrained_speed_phi", "constrained_speed_integrand", "ln_gamma", "DensityPath1D",
    "fisher_functional", "fisher_report", "FisherReport", "brenier_mobility", "log_mean",
    "geo_mean", "GeoMeanScaling", "LogMeanScaling",
]


def transport_scaling(q):
    """Mobility ``y^q`` on ``y >= 0`` and ``-inf`` below."""
    return PowerScaling(q, below=-math.inf)


def transport_phi(p, norm="euclidean", dim=1):
    return NormPowerShifted(p, norm=norm, dim=dim)


def _check_surface(spec):
    if spec.dim not in (2, 3):
        raise DimensionMismatch("the surface grid must have dimension 2 (x, y) or 3 (x1, x2, y)")


def _surface(phi, s, spec):
    nodes = spec.nodes().reshape(-1, spec.dim)
    rep = perspective_report(phi, s)
    vals = rep.perspective(nodes[:, :-1], nodes[:, -1:])
    return GridFunction(spec, np.asarray(vals).reshape(spec.shape),
                        flags=frozenset({f"branch:{rep.branch}"}))


def transport_integrand_surface(p, q, norm, spec):
    """Perspective of ``||x||^p / p`` under the mobility ``y^q`` on a grid over ``(x, y)``.

    The last grid axis is ``y``.  The branch tag is stored in the flags.
    """
    p, q = float(p), float(q)
    if not (p > 1 and q > 0):
        raise ParameterOutOfRange("need p > 1 and q > 0")
    _check_surface(spec)
    return _surface(transport_phi(p, norm, spec.dim - 1), transport_scaling(q), spec)


def constrained_speed_phi(p, interval, penalty=0.0, norm="euclidean", dim=1):
    """``||x||^p / p + indicator{a <= ||x|| <= b} + penalty``."""
    a, b = (float(v) for v in interval)
    if not (0 < a <= b):
        raise ParameterOutOfRange("the speed interval needs 0 < a <= b")
    base = NormPowerShifted(p, shift=penalty, norm=norm, dim=dim)
    return RadialIndicator(a, b, base=base, norm=norm, dim=dim)


def constrained_speed_integrand(p, q, interval, penalty, spec, norm="euclidean"):
    """Perspective of the speed-constrained cost under ``y^q`` on a grid over ``(x, y)``."""
    if not q > 0:
        raise ParameterOutOfRange("q must be > 0")
    _check_surface(spec)
    phi = constrained_speed_phi(p, interval, penalty, norm, spec.dim - 1)
    return _surface(phi, transport_scaling(q), spec)


def brenier_mobility(alpha, beta):
    """Concave mobility ``y(1-y) / (alpha(1-y) + beta y)`` on ``[0, 1]``."""
    return BrenierMobility(alpha, beta)


def _check_gamma(gamma, p=None):
    lo = 1.0 / p if p is not None else 0.0
    if not (lo < gamma <= 1):
        raise GammaOutOfRange(f"gamma must lie in ({lo}, 1]")


def ln_gamma(y, gamma, p=None):
    """Deformed logarithm: ``(y^(1-gamma) - 1)/(1-gamma)`` (``log y`` at ``gamma = 1``) on
    ``y > 0``, ``-inf`` on ``y <= 0``."""
    _check_gamma(gamma, p)
    y = np.asarray(y, dtype=float)
    pos = y > 0
    yp = np.where(pos, y, 1.0)
    if gamma == 1:
        v = np.log(yp)
    else:
        v = np.expm1((1 - gamma) * np.log(yp)) / (1 - gamma)
    out = np.where(pos, v, -np.inf)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class DensityPath1D:
    """Samples of a nonnegative function on a uniform 1-D grid."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        if self.spec.dim != 1:
            raise DimensionMismatch("a density path lives on a 1-D grid")
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if v.size != self.spec.counts[0]:
            raise DimensionMismatch("sample count must match the grid")
        if not np.all(np.isfinite(v)):
            raise ParameterOutOfRange("samples must be finite")
        object.__setattr__(self, "values", v)

    @property
    def h(self):
        return self.spec.spacing[0]

    @classmethod
    def from_function(cls, fn, lower, upper, h):
        n = int(round((upper - lower) / h)) + 1
        spec = GridSpec((float(lower),), (float(upper),), (n,))
        return cls(spec, fn(spec.axes()[0]))

    def coarsen(self):
        """Every other node (needs an odd node count)."""
        n = self.spec.counts[0]
        if n % 2 == 0 or n < 5:
            raise ParameterOutOfRange("coarsening needs an odd node count of at least 5")
        spec = GridSpec(self.spec.lower, self.spec.upper, ((n + 1) // 2,))
        return DensityPath1D(spec, self.values[::2])


def fisher_functional(path, gamma, p, norm="euclidean"):
    """Discrete ``int y |d/dw ln_gamma y|^p`` over ``{y > 0}``.

    Central differences inside, one-sided at the ends, trapezoid rule.  Any
    negative sample gives +inf.  At nodes with ``y = 0`` the contribution is
    0 when ``|y'| <= h`` and +inf otherwise.  ``norm`` is accepted for
    interface symmetry; on the line every norm is the absolute value.
    """
    p = float(p)
    if not p > 1:
        raise ParameterOutOfRange("p must be > 1")
    _check_gamma(gamma, p)
    y, h = path.values, path.h
    if np.any(y < 0):
        return math.inf
    dy = np.gradient(y, h, edge_order=1)
    zero = y == 0
    if np.any(np.abs(dy[zero]) > h):
        return math.inf
    integrand = np.zeros_like(y)
    pos = ~zero
    integrand[pos] = y[pos] ** (1 - gamma * p) * np.abs(dy[pos]) ** p
    return float(np.trapezoid(integrand, dx=h))


@dataclass
class FisherReport:
    gamma: float
    p: float
    h: float
    value: float
    coarse_value: float

    @property
    def refinement_difference(self):
        return abs(self.value - self.coarse_value)

    def to_json(self):
        return json.dumps({"gamma": self.gamma, "p": self.p, "h": self.h,
                           "value": to_json_value(self.value),
                           "refinement_check": {"coarse_h": 2 * self.h,
                                                "coarse_value": to_json_value(self.coarse_value),
                                                "difference": to_json_value(self.refinement_difference)
                                                if math.isfinite(self.value) and
                                                math.isfinite(self.coarse_value) else None}},
                          sort_keys=True)


def fisher_report(path, gamma, p, norm="euclidean"):
    """Value at spacing ``h`` together with the value on the grid of spacing ``2h``."""
    fine = fisher_functional(path, gamma, p, norm)
    coarse = fisher_functional(path.coarsen(), gamma, p, norm)
    return FisherReport(float(gamma), float(p), path.h, fine, coarse)
