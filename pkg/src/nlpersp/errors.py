"""Exception types shared across the package."""

from .extreal import ExtRealError, IndeterminateForm, NaNValue, ScaleNotPositive


class NlperspError(Exception):
    """Base class for domain errors raised by the library."""


class DimensionMismatch(NlperspError, ValueError):
    pass


class ParameterOutOfRange(NlperspError, ValueError):
    pass


class AllInfinite(NlperspError, ValueError):
    """A sampled function is identically +inf, so its conjugate is undefined."""


class BasepointOutsideDomain(NlperspError, ValueError):
    pass


class EmptyPositiveSet(NlperspError, ValueError):
    pass


class EmptyNegativeSet(NlperspError, ValueError):
    pass


class GridRequired(NlperspError, ValueError):
    """An oracle route was needed but no grid was supplied."""


class HypothesisViolated(NlperspError):
    pass


class UnknownConjugate(NlperspError):
    pass


class GammaOutOfRange(NlperspError, ValueError):
    pass


class ConfigParse(NlperspError, ValueError):
    pass


__all__ = [
    "ExtRealError", "IndeterminateForm", "NaNValue", "ScaleNotPositive",
    "NlperspError", "DimensionMismatch", "ParameterOutOfRange", "AllInfinite",
    "BasepointOutsideDomain", "EmptyPositiveSet", "EmptyNegativeSet",
    "GridRequired", "HypothesisViolated", "UnknownConjugate",
    "GammaOutOfRange", "ConfigParse",
]
