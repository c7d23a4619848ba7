"""Function representations: analytic families, scalings and sampled grids."""

from .core import Func, Meta, Negated, Opaque, as_points, evaluate
from .families import (Affine, Berhu, Huber, NormPowerShifted, PointIndicator, Radial,
                       RadialConjugate, RadialIndicator, RadialProfile, conjugate_exponent)
from .grid import GridBacked, GridFunction, GridSpec, sample
from .scalings import (BrenierMobility, ClippedQuadraticScaling, Formula, GeoMeanScaling,
                       LogMeanScaling, MaxZeroAffine, PowerScaling, geo_mean, log_mean)


def conjugate_analytic(f):
    """Exact conjugate of ``f`` as a Func, or None when the family has none stored."""
    return f.conjugate()


__all__ = [
    "Func", "Meta", "Negated", "Opaque", "as_points", "evaluate", "Affine", "Berhu", "Huber",
    "NormPowerShifted", "PointIndicator", "Radial", "RadialConjugate", "RadialIndicator",
    "RadialProfile", "conjugate_exponent", "GridBacked", "GridFunction", "GridSpec", "sample",
    "BrenierMobility", "ClippedQuadraticScaling", "Formula", "GeoMeanScaling", "LogMeanScaling",
    "MaxZeroAffine", "PowerScaling", "geo_mean", "log_mean", "conjugate_analytic",
]
