"""Two-phase Stokes block: assembly and backward-Euler-shifted solves."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import CoupledOperator, assemble_operator, build_rhs, gauss_mismatch
from .errors import IncompatibleDivergence, SolveFailure, ValidationError
from .geometry import GridSpec
from .state import FluidParams, Layout, State

__all__ = ["StokesSystem", "assemble_stokes", "solve_stokes_step", "StokesSolution"]


@dataclass
class StokesSystem:
    """Saddle-point matrix over velocity, pressure, pressure jump and multiplier.

    ``dt = inf`` gives the steady problem.  ``mass`` holds ``rho`` on the
    momentum rows, so the matrix is ``diag(mass)/dt + K``.
    """

    params: FluidParams
    grid: GridSpec
    dt: float
    K: sp.csr_matrix
    mass: np.ndarray
    op: CoupledOperator = field(repr=False)
    _lu: object = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.K.shape[0]

    @property
    def shift(self) -> np.ndarray:
        return self.mass / self.dt if np.isfinite(self.dt) else np.zeros_like(self.mass)

    @property
    def matrix(self) -> sp.csc_matrix:
        return (sp.diags(self.shift) + self.K).tocsc()

    def factor(self):
        if self._lu is None:
            try:
                self._lu = spla.splu(self.matrix)
            except RuntimeError as exc:
                raise SolveFailure(f"Stokes factorization failed: {exc}") from exc
        return self._lu


def assemble_stokes(params: FluidParams, grid: GridSpec, dt: float = np.inf) -> StokesSystem:
    """Assemble the Stokes block for one grid.

    Rows: MAC momentum (``rho/dt`` plus the viscous stress operator), one
    divergence row per cell, velocity glue and stress jump rows on the
    interface, slip rows on the walls and no-slip rows on top and bottom.
    """
    if not (dt > 0):
        raise ValidationError(f"dt must be > 0, got {dt}")
    op = assemble_operator(grid, params, couple_stokes=False, include_ms=False)
    n = op.layout.n_stokes
    K = op.K[:n, :n].tocsr()
    return StokesSystem(params, grid, float(dt), K, op.mass[:n].copy(), op)


@dataclass
class StokesSolution:
    state: State
    residual: float

    @property
    def u(self):
        return {k: v for k, v in self.state.u.items()}

    @property
    def p(self):
        return self.state.p

    @property
    def jump_p(self):
        return self.state.jump_p


def solve_stokes_step(
    sys_: StokesSystem,
    data: dict | None = None,
    curvature=None,
    u_prev: State | None = None,
) -> StokesSolution:
    """One backward-Euler Stokes solve.

    ``data`` holds the velocity slots ``g1`` ... ``g5``, ``g11`` ... ``g13``
    (see :func:`msns.assembly.zero_data_fields`); ``curvature`` is the
    ``sigma h''`` term of the normal-stress row.  Raises
    :class:`IncompatibleDivergence` when the divergence data and boundary
    fluxes violate the discrete divergence theorem.
    """
    grid = sys_.grid
    mismatch, scale = gauss_mismatch(grid, data)
    if abs(mismatch) > 1e-8 * scale:
        raise IncompatibleDivergence(f"divergence data exceed boundary flux by {mismatch:.3e}")
    layout = sys_.op.layout
    n = layout.n_stokes
    b = build_rhs(sys_.op, data, curvature=np.zeros(grid.nx) if curvature is None else curvature)[:n]
    if u_prev is not None and np.isfinite(sys_.dt):
        b = b + sys_.shift * u_prev.z[:n]
    lu = sys_.factor()
    x = lu.solve(b)
    A = sys_.matrix
    res = float(np.linalg.norm(A @ x - b) / max(np.linalg.norm(b), 1e-300))
    if not np.all(np.isfinite(x)):
        raise SolveFailure("non-finite Stokes solution")
    z = np.zeros(layout.size)
    z[:n] = x
    st = State(grid, z, t=0.0 if u_prev is None else u_prev.t + (sys_.dt if np.isfinite(sys_.dt) else 0.0))
    return StokesSolution(st, res)
