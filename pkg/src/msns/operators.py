"""Sparse building blocks on the staggered grid.

All operators here act on the flat layout of :class:`msns.state.Layout`.
Integrated forms (multiplied by control-volume size) are symmetric where the
continuous operator is, which keeps the discrete energy balance exact.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .geometry import HI, LO, GridSpec
from .state import FluidParams, Layout

__all__ = [
    "Coo",
    "strain_operators",
    "viscous_matrix",
    "divergence_matrix",
    "laplace_fv",
    "second_difference",
    "interface_flux_matrices",
]


class Coo:
    """Incremental COO triplet builder."""

    def __init__(self, shape):
        self.shape = shape
        self.r: list[np.ndarray] = []
        self.c: list[np.ndarray] = []
        self.v: list[np.ndarray] = []

    def add(self, rows, cols, vals):
        rows = np.asarray(rows).ravel()
        cols = np.asarray(cols).ravel()
        vals = np.broadcast_to(np.asarray(vals, dtype=float), rows.shape).ravel()
        self.r.append(rows)
        self.c.append(cols)
        self.v.append(vals)

    def tocsr(self) -> sp.csr_matrix:
        if not self.r:
            return sp.csr_matrix(self.shape)
        return sp.csr_matrix(
            (np.concatenate(self.v), (np.concatenate(self.r), np.concatenate(self.c))), shape=self.shape
        )


def _node_weights(grid: GridSpec, s: int):
    nx, ny, dx, dy = grid.nx, grid.ny(s), grid.dx, grid.dy(s)
    wx = np.full(nx + 1, dx)
    wx[[0, -1]] = 0.5 * dx
    wy = np.full(ny + 1, dy)
    wy[[0, -1]] = 0.5 * dy
    return np.outer(wx, wy)


@lru_cache(maxsize=32)
def strain_operators(layout: Layout, s: int):
    """Difference operators for ``u1_x`` (cells), ``u2_y`` (cells), ``u1_y`` and ``u2_x`` (nodes).

    Returns sparse matrices acting on the velocity part of the layout.
    """
    grid = layout.grid
    nx, ny, dx, dy = grid.nx, grid.ny(s), grid.dx, grid.dy(s)
    nv = layout.n_velocity
    u1 = layout.index(Layout.slab_name("u1", s))
    u2 = layout.index(Layout.slab_name("u2", s))
    t1 = layout.index(Layout.slab_name("t1", s))
    s2 = layout.index(Layout.slab_name("s2", s))

    ncell = nx * ny
    cells = np.arange(ncell).reshape(nx, ny)
    e11 = Coo((ncell, nv))
    e11.add(cells, u1[1:, :], 1.0 / dx)
    e11.add(cells, u1[:-1, :], -1.0 / dx)
    e22 = Coo((ncell, nv))
    e22.add(cells, u2[:, 1:], 1.0 / dy)
    e22.add(cells, u2[:, :-1], -1.0 / dy)

    nnode = (nx + 1) * (ny + 1)
    nodes = np.arange(nnode).reshape(nx + 1, ny + 1)
    uy = Coo((nnode, nv))
    uy.add(nodes[:, 1:ny], u1[:, 1:], 1.0 / dy)
    uy.add(nodes[:, 1:ny], u1[:, :-1], -1.0 / dy)
    uy.add(nodes[:, 0], u1[:, 0], 2.0 / dy)
    uy.add(nodes[:, 0], t1[:, 0], -2.0 / dy)
    uy.add(nodes[:, ny], t1[:, 1], 2.0 / dy)
    uy.add(nodes[:, ny], u1[:, -1], -2.0 / dy)
    vx = Coo((nnode, nv))
    vx.add(nodes[1:nx, :], u2[1:, :], 1.0 / dx)
    vx.add(nodes[1:nx, :], u2[:-1, :], -1.0 / dx)
    vx.add(nodes[0, :], u2[0, :], 2.0 / dx)
    vx.add(nodes[0, :], s2[0, :], -2.0 / dx)
    vx.add(nodes[nx, :], s2[1, :], 2.0 / dx)
    vx.add(nodes[nx, :], u2[-1, :], -2.0 / dx)
    return e11.tocsr(), e22.tocsr(), uy.tocsr(), vx.tocsr()


def viscous_matrix(layout: Layout, params: FluidParams) -> sp.csr_matrix:
    """Integrated dissipation form: ``U^T K U = sum 2 mu |D u|^2 dV``."""
    grid = layout.grid
    K = sp.csr_matrix((layout.n_velocity, layout.n_velocity))
    for s in (LO, HI):
        mu = params.mu(s)
        vol = grid.cell_volume(s)
        e11, e22, uy, vx = strain_operators(layout, s)
        w_node = sp.diags(4.0 * mu * _node_weights(grid, s).ravel())
        e12 = 0.5 * (uy + vx)
        K = K + 2.0 * mu * vol * (e11.T @ e11 + e22.T @ e22) + e12.T @ w_node @ e12
    return K.tocsr()


def divergence_matrix(layout: Layout) -> list[sp.csr_matrix]:
    """Integrated divergence per slab, rows are cells."""
    grid = layout.grid
    out = []
    for s in (LO, HI):
        nx, ny, dx, dy = grid.nx, grid.ny(s), grid.dx, grid.dy(s)
        u1 = layout.index(Layout.slab_name("u1", s))
        u2 = layout.index(Layout.slab_name("u2", s))
        cells = np.arange(nx * ny).reshape(nx, ny)
        D = Coo((nx * ny, layout.n_velocity))
        D.add(cells, u1[1:, :], dy)
        D.add(cells, u1[:-1, :], -dy)
        D.add(cells, u2[:, 1:], dx)
        D.add(cells, u2[:, :-1], -dx)
        out.append(D.tocsr())
    return out


def laplace_fv(grid: GridSpec, s: int):
    """Cell-centred five-point Laplacian of one slab in integrated form.

    Outer faces carry zero flux; the interface face row is a Dirichlet face
    reached over half a cell.  Returns ``(L, B)`` with the integrated
    Laplacian ``L eta + B eta_sigma``.
    """
    nx, ny, dx, dy = grid.nx, grid.ny(s), grid.dx, grid.dy(s)
    n = nx * ny
    idx = np.arange(n).reshape(nx, ny)
    L = Coo((n, n))
    # vertical faces
    cx = dy / dx
    L.add(idx[1:, :], idx[1:, :], -cx)
    L.add(idx[1:, :], idx[:-1, :], cx)
    L.add(idx[:-1, :], idx[:-1, :], -cx)
    L.add(idx[:-1, :], idx[1:, :], cx)
    # horizontal faces
    cy = dx / dy
    L.add(idx[:, 1:], idx[:, 1:], -cy)
    L.add(idx[:, 1:], idx[:, :-1], cy)
    L.add(idx[:, :-1], idx[:, :-1], -cy)
    L.add(idx[:, :-1], idx[:, 1:], cy)
    jrow = ny - 1 if s == LO else 0
    B = Coo((n, nx))
    L.add(idx[:, jrow], idx[:, jrow], -2.0 * cy)
    B.add(idx[:, jrow], np.arange(nx), 2.0 * cy)
    return L.tocsr(), B.tocsr()


def interface_flux_matrices(grid: GridSpec, s: int):
    """One-sided ``d eta / dy`` on the interface: ``F eta + G eta_sigma``."""
    nx, ny, dy = grid.nx, grid.ny(s), grid.dy(s)
    idx = np.arange(nx * ny).reshape(nx, ny)
    F = Coo((nx, nx * ny))
    G = Coo((nx, nx))
    i = np.arange(nx)
    if s == LO:
        F.add(i, idx[:, -1], -2.0 / dy)
        G.add(i, i, 2.0 / dy)
    else:
        F.add(i, idx[:, 0], 2.0 / dy)
        G.add(i, i, -2.0 / dy)
    return F.tocsr(), G.tocsr()


def second_difference(nx: int, dx: float) -> sp.csr_matrix:
    """``h''`` with mirrored ghosts (zero end slope)."""
    main = np.full(nx, -2.0)
    main[[0, -1]] = -1.0
    off = np.ones(nx - 1)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr") / dx**2


def slope_source(nx: int, dx: float, slopes) -> np.ndarray:
    """Contribution of prescribed end slopes to the second difference."""
    out = np.zeros(nx)
    out[0] -= slopes[0] / dx
    out[-1] += slopes[1] / dx
    return out
