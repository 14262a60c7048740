"""Numerical toolkit for the nonnecrotic-tumor free-boundary model:
stationary states, linearized spectra and the stability threshold, modal and
radial simulation, the translation action on boundary graphs, and a
desk-scale verifier of the equivariant center-manifold picture."""

__version__ = "0.1.0"

from .model import TumorModel, build_model, reference_model
from .stationary import (
    StationaryState,
    integrate_sigma,
    mass_balance,
    pressure_profile,
    rescale_to_unit,
    solve_stationary,
)

__all__ = [
    "TumorModel",
    "build_model",
    "reference_model",
    "StationaryState",
    "integrate_sigma",
    "mass_balance",
    "pressure_profile",
    "rescale_to_unit",
    "solve_stationary",
]
