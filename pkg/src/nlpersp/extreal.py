"""Extended real line [-inf, +inf] on top of IEEE doubles.

Values are plain Python floats (or float arrays); the helpers here enforce
the two rules plain float arithmetic does not: NaN is never a legal value,
and ``(+inf) + (-inf)`` or ``0 * inf`` raise instead of producing NaN.
"""

import math

import numpy as np

POS_INF = math.inf
NEG_INF = -math.inf


class ExtRealError(ArithmeticError):
    """Base class for extended-real contract violations."""


class NaNValue(ExtRealError, ValueError):
    """A NaN reached a place where an extended real was expected."""


class IndeterminateForm(ExtRealError):
    """``(+inf) + (-inf)`` in either order."""


class ScaleNotPositive(ExtRealError):
    """Scaling factor is not a strictly positive finite real."""


def ext(value):
    """Convert ``value`` to an extended real (a float), rejecting NaN."""
    v = float(value)
    if math.isnan(v):
        raise NaNValue("NaN is not an extended real")
    return v


def ext_array(values):
    """Float array view of ``values`` with a NaN check."""
    arr = np.asarray(values, dtype=float)
    if np.isnan(arr).any():
        raise NaNValue("array contains NaN")
    return arr


def add(a, b):
    """Extended addition; raises :class:`IndeterminateForm` on inf - inf."""
    a, b = ext(a), ext(b)
    if math.isinf(a) and math.isinf(b) and a != b:
        raise IndeterminateForm(f"{render(a)} + {render(b)}")
    return a + b


def add_array(a, b):
    """Elementwise :func:`add` for arrays."""
    a, b = ext_array(a), ext_array(b)
    if np.any(np.isinf(a) & np.isinf(b) & (a != b)):
        raise IndeterminateForm("(+inf) + (-inf) in array sum")
    return a + b


def scale(c, a):
    """Return ``c * a`` for a positive finite real ``c``."""
    c = float(c)
    if not (math.isfinite(c) and c > 0):
        raise ScaleNotPositive(f"scale factor must be finite and > 0, got {c!r}")
    return c * ext(a)


def scale_array(c, a):
    """Elementwise :func:`scale`; ``c`` and ``a`` broadcast."""
    c = np.asarray(c, dtype=float)
    if not np.all(np.isfinite(c) & (c > 0)):
        raise ScaleNotPositive("scale factors must be finite and > 0")
    return c * ext_array(a)


def is_finite(a):
    return math.isfinite(ext(a))


def render(a):
    """Text form used by the CSV/JSON emitters: ``+inf``, ``-inf`` or a decimal."""
    a = ext(a)
    if a == POS_INF:
        return "+inf"
    if a == NEG_INF:
        return "-inf"
    return repr(a)


def parse(text):
    """Inverse of :func:`render`; also accepts the unicode minus sign."""
    t = str(text).strip().replace("−", "-")
    if t in ("+inf", "inf", "Infinity", "+Infinity"):
        return POS_INF
    if t in ("-inf", "-Infinity"):
        return NEG_INF
    return ext(t)


def to_json_value(a):
    """JSON-safe form: finite values stay numbers, infinities become strings."""
    a = ext(a)
    return a if math.isfinite(a) else render(a)


def from_json_value(v):
    return parse(v) if isinstance(v, str) else ext(v)
