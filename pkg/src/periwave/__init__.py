"""periwave: periodic traveling waves of nonlinear dispersive equations.

Solves the profile equation of u_t + (f(u))_x - (M u)_x = 0 (and its
regularized BBM-type variant) on periodic domains, checks the spectral
hypotheses of the linearized operator, evaluates orbital/spectral stability
criteria, and cross-checks verdicts by direct time evolution.
"""

__version__ = "0.1.0"

from .spectral import DispersionSymbol, Field, PeriodicGrid
from .waves import (
    Constraint,
    Nonlinearity,
    TravelingWave,
    bbm_dnoidal_wave,
    cnoidal_wave,
    continue_family,
    ilw_wave,
    solve_newton,
)
from .linop import assemble, check_H0
from .stability import certify

__all__ = [
    "__version__",
    "DispersionSymbol",
    "Field",
    "PeriodicGrid",
    "Constraint",
    "Nonlinearity",
    "TravelingWave",
    "bbm_dnoidal_wave",
    "cnoidal_wave",
    "continue_family",
    "ilw_wave",
    "solve_newton",
    "assemble",
    "check_H0",
    "certify",
]
