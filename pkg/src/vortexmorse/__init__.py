"""Relative equilibria of planar point vortices: Hessian spectra, Morse
indices, closed-form four-vortex families, numerical census and dynamics."""

from .errors import NumericalError, ValidationError, VortexError
from .model import Circulations, VortexSystem, invariants, normalize
from .families import asymmetric, kite, rhombus
from .solver import analyze, census, refine
from .spectral import spectral_report
from .morse import classify, morse_audit, poincare_polynomial

__version__ = "0.1.0"

__all__ = [
    "Circulations",
    "NumericalError",
    "ValidationError",
    "VortexError",
    "VortexSystem",
    "analyze",
    "asymmetric",
    "census",
    "classify",
    "invariants",
    "kite",
    "morse_audit",
    "normalize",
    "poincare_polynomial",
    "refine",
    "rhombus",
    "spectral_report",
]
