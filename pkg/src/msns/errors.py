"""Exception types raised by the solver stack."""


class MsnsError(Exception):
    """Base class for all package errors."""


class ValidationError(MsnsError, ValueError):
    """Invalid configuration or input data."""


class MapNotInvertible(MsnsError):
    """The height field is too large for the reference-frame map."""


class SolveFailure(MsnsError):
    """A sparse factorization or solve failed."""


class IncompatibleData(MsnsError):
    """Forcing data violate a discrete solvability condition."""


class IncompatibleDivergence(IncompatibleData):
    """Divergence data disagree with the boundary flux (discrete Gauss check)."""


class NoConvergence(MsnsError):
    """An iteration failed to contract."""


class AssemblyError(MsnsError):
    """Inconsistent unknown layout during matrix assembly."""


class EliminationSingular(MsnsError):
    """A constraint block could not be eliminated."""


class EigenFailure(MsnsError):
    """The dense eigensolver failed."""


class BadMode(MsnsError, ValueError):
    """Wavenumber is not compatible with the Neumann ends."""


class DegenerateWindow(MsnsError):
    """Fit window holds too few or non-positive samples."""


class EmptyData(MsnsError, ValueError):
    """Nothing to plot or write."""
