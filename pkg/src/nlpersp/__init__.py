"""Perspective functions with nonlinear scalings: closed forms and grid oracles."""

__version__ = "0.1.0"

from .envelopes import berhu, envelope_down, envelope_up, huber, max_decomposition_check  # noqa: E402
from .perspective import (classify_phi_star, perspective_eval, perspective_report,  # noqa: E402
                          preperspective_conjugate_eval, preperspective_eval)

__all__ = [
    "__version__", "berhu", "huber", "envelope_down", "envelope_up", "max_decomposition_check",
    "classify_phi_star", "perspective_eval", "perspective_report",
    "preperspective_conjugate_eval", "preperspective_eval",
]
