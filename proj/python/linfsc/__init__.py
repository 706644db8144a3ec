"""Penalized synthetic control estimators (L-infinity and L1 + L-infinity)."""

from ._linfsc import (
    LinfscError,
    cross_validate,
    effects,
    fit_weights,
    generate_panel,
    simulate,
    solve_qp,
)

__all__ = [
    "LinfscError",
    "cross_validate",
    "effects",
    "fit_weights",
    "generate_panel",
    "simulate",
    "solve_qp",
]
__version__ = "0.1.0"
