"""Two-phase capillary Navier-Stokes / Mullins-Sekerka solver in a fixed reference frame.

The interface is a graph ``y = h(x)`` mapped to ``y = 0`` by a cut-off
transform; the package provides the transformed operators, a coupled
backward-Euler stepper with fixed-point iteration for the nonlinear
remainders, and the spectrum of the linearization about the flat state.
"""
__version__ = "0.1.0"

from .coupled import (
    LinearData,
    SimConfig,
    check_compatibility,
    linear_step,
    nonlinear_step,
    simulate,
    splitting_step,
)
from .diagnostics import DiagnosticsSeries, admissible_exponents, decay_fit, energy
from .errors import (
    BadMode,
    DegenerateWindow,
    EigenFailure,
    EliminationSingular,
    EmptyData,
    IncompatibleData,
    IncompatibleDivergence,
    MapNotInvertible,
    MsnsError,
    NoConvergence,
    SolveFailure,
    ValidationError,
)
from .geometry import DomainSpec, GridSpec, hanzawa_coeffs, make_bump
from .spectral import assemble_pencil, reduce_and_eigen, spectrum, verify_spectrum
from .state import FluidParams, State

__all__ = [
    "__version__",
    "LinearData",
    "SimConfig",
    "check_compatibility",
    "linear_step",
    "nonlinear_step",
    "simulate",
    "splitting_step",
    "DiagnosticsSeries",
    "admissible_exponents",
    "decay_fit",
    "energy",
    "BadMode",
    "DegenerateWindow",
    "EigenFailure",
    "EliminationSingular",
    "EmptyData",
    "IncompatibleData",
    "IncompatibleDivergence",
    "MapNotInvertible",
    "MsnsError",
    "NoConvergence",
    "SolveFailure",
    "ValidationError",
    "DomainSpec",
    "GridSpec",
    "hanzawa_coeffs",
    "make_bump",
    "assemble_pencil",
    "reduce_and_eigen",
    "spectrum",
    "verify_spectrum",
    "FluidParams",
    "State",
]
