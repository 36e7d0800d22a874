"""Numerics for quasi-periodic Jacobi operators with trigonometric-polynomial coefficients."""
from .coeffs import (
    Frequency,
    ModelSpec,
    TrigPoly,
    almost_mathieu,
    extended_harper,
    free_laplacian,
)
from .orbit import IndexInterval

__version__ = "0.1.0"

__all__ = [
    "Frequency",
    "IndexInterval",
    "ModelSpec",
    "TrigPoly",
    "almost_mathieu",
    "extended_harper",
    "free_laplacian",
]
