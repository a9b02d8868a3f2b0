"""Two-phase scalar elliptic problems on the reference frame.

``solve_potential`` handles the chemical potential: a Laplacian in each phase
with Dirichlet data on the interface and Neumann data on the outer boundary,
so the two phases decouple.  ``solve_transmission`` handles the pressure
problem with coefficient ``1/rho`` and a prescribed interface jump, and
defines the solution operators ``T1`` and ``T2``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import IncompatibleData, SolveFailure, ValidationError
from .geometry import HI, LO, GridSpec
from .operators import Coo, interface_flux_matrices, laplace_fv
from .state import FluidParams

__all__ = [
    "PotentialSolution",
    "TransmissionRHS",
    "TransmissionSolution",
    "solve_potential",
    "solve_transmission",
    "apply_T1",
    "apply_T2",
    "zero_vector_field",
]


def _factor(A: sp.spmatrix):
    try:
        return spla.splu(sp.csc_matrix(A))
    except RuntimeError as exc:  # singular factor
        raise SolveFailure(f"sparse factorization failed: {exc}") from exc


@lru_cache(maxsize=16)
def _potential_factors(grid: GridSpec):
    out = []
    for s in (LO, HI):
        L, B = laplace_fv(grid, s)
        out.append((_factor(L), B))
    return tuple(out)


@dataclass
class PotentialSolution:
    """Phase values plus one-sided interface derivatives."""

    eta_lo: np.ndarray
    eta_hi: np.ndarray
    dy_lo: np.ndarray
    dy_hi: np.ndarray

    @property
    def jump(self) -> np.ndarray:
        """``[[d eta / dy]]``, upper minus lower."""
        return self.dy_hi - self.dy_lo


def solve_potential(g8, dirichlet_sigma, g10=None, grid: GridSpec = None) -> PotentialSolution:
    """Solve ``Delta eta = g8`` per phase with ``eta = dirichlet_sigma`` on the interface.

    Parameters
    ----------
    g8 : pair of arrays (nx, ny_lo), (nx, ny_hi) or None
        Bulk source.
    dirichlet_sigma : array (nx,)
        Interface values.
    g10 : dict, optional
        Outward normal derivatives keyed ``left_lo``, ``right_lo``,
        ``left_hi``, ``right_hi``, ``bottom``, ``top``.
    grid : GridSpec
    """
    if grid is None:
        raise ValidationError("solve_potential needs a grid")
    nx, dx = grid.nx, grid.dx
    ds = np.asarray(dirichlet_sigma, dtype=float)
    if ds.shape != (nx,) or not np.all(np.isfinite(ds)):
        raise ValidationError(f"interface data must be {nx} finite values")
    g10 = g10 or {}
    factors = _potential_factors(grid)
    etas, derivs = [], []
    for s, tag in ((LO, "lo"), (HI, "hi")):
        ny, dy = grid.ny(s), grid.dy(s)
        lu, B = factors[s]
        src = np.zeros((nx, ny)) if g8 is None else np.asarray(g8[s], dtype=float)
        rhs = src * dx * dy
        rhs[0, :] -= np.asarray(g10.get(f"left_{tag}", 0.0)) * dy
        rhs[-1, :] -= np.asarray(g10.get(f"right_{tag}", 0.0)) * dy
        if s == LO:
            rhs[:, 0] -= np.asarray(g10.get("bottom", 0.0)) * dx
        else:
            rhs[:, -1] -= np.asarray(g10.get("top", 0.0)) * dx
        eta = lu.solve(rhs.ravel() - B @ ds).reshape(nx, ny)
        if not np.all(np.isfinite(eta)):
            raise SolveFailure("non-finite potential")
        F, G = interface_flux_matrices(grid, s)
        etas.append(eta)
        derivs.append(F @ eta.ravel() + G @ ds)
    return PotentialSolution(etas[0], etas[1], derivs[0], derivs[1])


# -- transmission problem ------------------------------------------------------


def zero_vector_field(grid: GridSpec) -> dict:
    """Face-centred vector field with the velocity block shapes (u1_lo ... u2_hi)."""
    nx = grid.nx
    return {
        "u1_lo": np.zeros((nx + 1, grid.ny_lo)),
        "u1_hi": np.zeros((nx + 1, grid.ny_hi)),
        "u2_lo": np.zeros((nx, grid.ny_lo + 1)),
        "u2_hi": np.zeros((nx, grid.ny_hi + 1)),
    }


@dataclass
class TransmissionRHS:
    """Forcing of ``div(grad p / rho - f) = q`` with ``[[p]] = jump``.

    ``f`` is a face field as from :func:`zero_vector_field`; ``q`` an optional
    bulk scalar source per phase whose integral must vanish.
    """

    f: dict | None = None
    jump: np.ndarray | None = None
    q: tuple | None = None


@dataclass
class TransmissionSolution:
    p_lo: np.ndarray
    p_hi: np.ndarray
    grad: dict
    flux_sigma: np.ndarray


class _TransmissionOperator:
    """Cell-centred FV operator for ``div(grad p / rho)`` with eliminated interface flux."""

    def __init__(self, params: FluidParams, grid: GridSpec):
        self.params, self.grid = params, grid
        nx = grid.nx
        n_lo, n_hi = nx * grid.ny_lo, nx * grid.ny_hi
        self.n_lo, self.n = n_lo, n_lo + n_hi
        self.idx = (np.arange(n_lo).reshape(nx, grid.ny_lo), n_lo + np.arange(n_hi).reshape(nx, grid.ny_hi))
        A = Coo((self.n + 1, self.n + 1))
        for s in (LO, HI):
            idx = self.idx[s]
            k = 1.0 / params.rho(s)
            cx = k * grid.dy(s) / grid.dx
            cy = k * grid.dx / grid.dy(s)
            for a, b, c in ((idx[1:, :], idx[:-1, :], cx), (idx[:, 1:], idx[:, :-1], cy)):
                A.add(a, a, -c)
                A.add(a, b, c)
                A.add(b, b, -c)
                A.add(b, a, c)
        alpha = 2.0 / (params.rho_plus * grid.dy_hi)
        beta = 2.0 / (params.rho_minus * grid.dy_lo)
        self.alpha, self.beta = alpha, beta
        self.S = 1.0 / alpha + 1.0 / beta
        top, bot = self.idx[LO][:, -1], self.idx[HI][:, 0]
        w = grid.dx / self.S
        # lower top cell gains Q dx, upper bottom cell loses Q dx
        A.add(top, bot, w)
        A.add(top, top, -w)
        A.add(bot, bot, -w)
        A.add(bot, top, w)
        vols = np.concatenate([np.full(n_lo, grid.cell_volume(LO)), np.full(n_hi, grid.cell_volume(HI))])
        self.vols = vols
        A.add(np.full(self.n, self.n), np.arange(self.n), vols)
        A.add(np.arange(self.n), np.full(self.n, self.n), vols)
        self.lu = _factor(A.tocsr())

    def solve(self, rhs: TransmissionRHS) -> TransmissionSolution:
        grid, nx, dx = self.grid, self.grid.nx, self.grid.dx
        f = rhs.f or zero_vector_field(grid)
        jump = np.zeros(nx) if rhs.jump is None else np.asarray(rhs.jump, dtype=float)
        b = np.zeros(self.n + 1)
        if rhs.q is not None:
            qv = np.concatenate([np.ravel(rhs.q[0]), np.ravel(rhs.q[1])])
            total = float(qv @ self.vols)
            scale = max(1.0, float(np.abs(qv) @ self.vols))
            if abs(total) > 1e-8 * scale:
                raise IncompatibleData(f"bulk source integral {total:.3e} does not vanish")
            b[: self.n] += qv * self.vols
        # divergence of f over interior faces enters as -div f
        for s, tag in ((LO, "lo"), (HI, "hi")):
            idx = self.idx[s]
            dy = grid.dy(s)
            f1 = np.asarray(f[f"u1_{tag}"], dtype=float)
            f2 = np.asarray(f[f"u2_{tag}"], dtype=float)
            div = np.zeros((nx, grid.ny(s)))
            div[:-1, :] += f1[1:-1, :] * dy
            div[1:, :] -= f1[1:-1, :] * dy
            div[:, :-1] += f2[:, 1:-1] * dx
            div[:, 1:] -= f2[:, 1:-1] * dx
            b[idx.ravel()] += div.ravel()
        f2m = np.asarray(f["u2_lo"], dtype=float)[:, -1]
        f2p = np.asarray(f["u2_hi"], dtype=float)[:, 0]
        r = jump + f2p / self.alpha + f2m / self.beta
        top, bot = self.idx[LO][:, -1], self.idx[HI][:, 0]
        # Q = (p+_0 - p-_top - r) / S; lower top gets +Q dx, upper bottom -Q dx
        b[top] += dx * r / self.S
        b[bot] -= dx * r / self.S
        x = self.lu.solve(b)
        if not np.all(np.isfinite(x)):
            raise SolveFailure("non-finite pressure")
        p_lo = x[: self.n_lo].reshape(nx, grid.ny_lo)
        p_hi = x[self.n_lo : self.n].reshape(nx, grid.ny_hi)
        Q = (p_hi[:, 0] - p_lo[:, -1] - r) / self.S
        grad = zero_vector_field(grid)
        for s, tag, p in ((LO, "lo", p_lo), (HI, "hi", p_hi)):
            k = 1.0 / self.params.rho(s)
            grad[f"u1_{tag}"][1:-1, :] = k * (p[1:] - p[:-1]) / dx
            grad[f"u2_{tag}"][:, 1:-1] = k * (p[:, 1:] - p[:, :-1]) / grid.dy(s)
        grad["u2_lo"][:, -1] = Q + f2m
        grad["u2_hi"][:, 0] = Q + f2p
        return TransmissionSolution(p_lo, p_hi, grad, Q)


@lru_cache(maxsize=16)
def _transmission(params: FluidParams, grid: GridSpec) -> _TransmissionOperator:
    return _TransmissionOperator(params, grid)


def solve_transmission(rhs: TransmissionRHS, params: FluidParams, grid: GridSpec) -> TransmissionSolution:
    """Weak pressure problem with coefficient ``1/rho`` and interface jump.

    Finds mean-zero ``p`` with ``(grad p / rho - f, grad phi) = -(q, phi)``
    for all cell functions ``phi`` under natural outer boundary conditions, where
    the interface flux is continuous and ``p+ - p- = jump`` on the interface.
    Returns the pressure and the face field ``grad p / rho`` (zero on outer
    faces; one-sided values on the interface row).
    """
    return _transmission(params, grid).solve(rhs)


def apply_T1(f: dict, params: FluidParams, grid: GridSpec) -> dict:
    """``rho``-weighted gradient part of the face field ``f``."""
    return solve_transmission(TransmissionRHS(f=f), params, grid).grad


def apply_T2(jump, params: FluidParams, grid: GridSpec) -> dict:
    """Gradient field generated by interface jump data alone."""
    return solve_transmission(TransmissionRHS(jump=jump), params, grid).grad
