"""Row-by-row assembly of the coupled linear operator.

Every unknown of :class:`~msns.state.Layout` owns exactly one row, so the
operator is square by construction.  Rows are written per unit volume (bulk),
per unit length (interface and wall) or pointwise (Dirichlet, glue), and the
backward-Euler matrix is ``diag(mass) / dt + K``.  Row ownership:

=====================  ==========================================
unknown                row
=====================  ==========================================
``u1`` wall columns    ``u1 = `` wall normal-velocity data
``u1`` interior        horizontal momentum
``u2`` outer rows      ``u2 = `` top/bottom data
``u2`` interior        vertical momentum
``u2_lo`` interface    velocity glue ``u2+ - u2- = g``
``u2_hi`` interface    normal stress balance
``t1`` outer           ``u1 = `` top/bottom data
``t1_lo`` interface    velocity glue ``u1+ - u1- = g``
``t1_hi`` interface    tangential stress balance
``s2``                 wall tangential stress (Dirichlet at corners)
``p``                  divergence, plus the mean multiplier ``c``
``jp``                 ``jp = p+ - p-`` from the adjacent cells
``c``                  zero pressure mean
``h``                  interface kinematics
``eta``                potential Laplacian with interface Dirichlet
=====================  ==========================================
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .geometry import HI, LO, GridSpec
from .operators import (
    Coo,
    divergence_matrix,
    interface_flux_matrices,
    laplace_fv,
    second_difference,
    slope_source,
    viscous_matrix,
)
from .state import FluidParams, Layout, layout_for

__all__ = ["RowGroups", "CoupledOperator", "assemble_operator", "zero_data_fields", "build_rhs", "gauss_mismatch"]


@dataclass
class RowGroups:
    """Index sets of the row families, for diagnostics and reduction."""

    momentum: np.ndarray
    dirichlet: np.ndarray
    glue: np.ndarray
    tangential: np.ndarray
    normal: np.ndarray
    wall_stress: np.ndarray
    divergence: np.ndarray
    jump: np.ndarray
    mean: np.ndarray
    height: np.ndarray
    potential: np.ndarray
    row_scale: np.ndarray = field(repr=False, default=None)


@dataclass
class CoupledOperator:
    """Sparse ``K`` and diagonal mass for ``mass * dz/dt + K z = b``."""

    layout: Layout
    params: FluidParams
    K: sp.csr_matrix
    mass: np.ndarray
    rows: RowGroups
    couple_stokes: bool
    blocks: dict

    def backward_euler(self, dt: float) -> sp.csc_matrix:
        return (sp.diags(self.mass / dt) + self.K).tocsc()


def _emit(coo: Coo, target_rows, mat, col_offset=0, scale=1.0):
    m = sp.coo_matrix(mat)
    target_rows = np.asarray(target_rows).ravel()
    coo.add(target_rows[m.row], m.col + col_offset, m.data * scale)


def _vel(layout, base, s):
    return layout.index(Layout.slab_name(base, s))


def assemble_operator(
    grid: GridSpec, params: FluidParams, couple_stokes: bool = True, include_ms: bool = True
) -> CoupledOperator:
    """Assemble the coupled operator for one grid and parameter set.

    ``couple_stokes=False`` drops the velocity term from the kinematic row and
    the curvature force from the normal-stress row, leaving the
    Mullins-Sekerka block decoupled from the flow.  ``include_ms=False``
    replaces the height and potential rows by identities (pure Stokes).
    """
    layout = Layout(grid)
    nx, dx = grid.nx, grid.dx
    N = layout.size
    nv = layout.n_velocity
    sigma = params.sigma
    coo = Coo((N, N))
    mass = np.zeros(N)
    row_scale = np.ones(N)

    Kv = viscous_matrix(layout, params).tocsr()
    Dint = divergence_matrix(layout)
    D2 = second_difference(nx, dx)

    momentum, dirichlet, glue, tang, normal, wall, div = [], [], [], [], [], [], []

    for s in (LO, HI):
        ny, dy = grid.ny(s), grid.dy(s)
        vol = dx * dy
        rho = params.rho(s)
        u1 = _vel(layout, "u1", s)
        u2 = _vel(layout, "u2", s)
        t1 = _vel(layout, "t1", s)
        s2 = _vel(layout, "s2", s)
        p = layout.index(Layout.slab_name("p", s))
        G = -(Dint[s].T).tocsr()  # pressure gradient, integrated

        # momentum rows
        mrows = np.concatenate([u1[1:-1, :].ravel(), u2[:, 1:-1].ravel()])
        _emit(coo, mrows, Kv[mrows, :], 0, 1.0 / vol)
        _emit(coo, mrows, G[mrows, :], p.ravel()[0], 1.0 / vol)
        mass[mrows] = rho
        row_scale[mrows] = vol
        momentum.append(mrows)

        # Dirichlet rows
        drows = [u1[0, :], u1[-1, :]]
        if s == LO:
            drows += [u2[:, 0], t1[:, 0], t1[[0, -1], 1], s2[:, 0]]
        else:
            drows += [u2[:, -1], t1[:, 1], t1[[0, -1], 0], s2[:, -1]]
        drows = np.concatenate([np.ravel(d) for d in drows])
        coo.add(drows, drows, 1.0)
        dirichlet.append(drows)

        # wall tangential-stress rows
        wy = np.full(ny + 1, dy)
        wy[[0, -1]] = 0.5 * dy
        jr = slice(1, ny + 1) if s == LO else slice(0, ny)
        for w in (0, 1):
            rows = s2[w, jr]
            _emit(coo, rows, Kv[rows, :], 0, 1.0)
            row_scale[rows] = wy[jr]
            wall.append(rows)

        # divergence rows (per unit volume) with the mean multiplier
        _emit(coo, p.ravel(), Dint[s], 0, 1.0 / vol)
        coo.add(p.ravel(), np.full(p.size, layout.slices["c"].start), 1.0)
        row_scale[p.ravel()] = vol
        div.append(p.ravel())

    # interface rows
    i_int = np.arange(1, nx)
    t1lo, t1hi = _vel(layout, "t1", LO), _vel(layout, "t1", HI)
    u2lo, u2hi = _vel(layout, "u2", LO), _vel(layout, "u2", HI)
    g_t = t1lo[i_int, 1]
    coo.add(g_t, t1hi[i_int, 0], 1.0)
    coo.add(g_t, t1lo[i_int, 1], -1.0)
    g_n = u2lo[:, -1]
    coo.add(g_n, u2hi[:, 0], 1.0)
    coo.add(g_n, u2lo[:, -1], -1.0)
    glue = [g_t, g_n]

    r_t = t1hi[i_int, 0]
    _emit(coo, r_t, Kv[t1hi[i_int, 0], :] + Kv[t1lo[i_int, 1], :], 0, 1.0 / dx)
    row_scale[r_t] = dx
    tang = [r_t]

    r_n = u2hi[:, 0]
    jp = layout.index("jp")
    h = layout.index("h")
    _emit(coo, r_n, Kv[u2hi[:, 0], :] + Kv[u2lo[:, -1], :], 0, 1.0 / dx)
    coo.add(r_n, jp, 1.0)
    if couple_stokes:
        _emit(coo, r_n, D2, h[0], -sigma)
    row_scale[r_n] = dx
    normal = [r_n]

    # pressure jump and mean rows
    plo, phi = layout.index("p_lo"), layout.index("p_hi")
    coo.add(jp, jp, 1.0)
    coo.add(jp, phi[:, 0], -1.0)
    coo.add(jp, plo[:, -1], 1.0)
    c = layout.slices["c"].start
    area = grid.domain.area
    for s, p in ((LO, plo), (HI, phi)):
        coo.add(np.full(p.size, c), p.ravel(), grid.cell_volume(s) / area)

    # height and potential rows
    pot = []
    blocks = {"Kv": Kv, "D": Dint, "D2": D2}
    if include_ms:
        Fm, Gm = interface_flux_matrices(grid, LO)
        Fp, Gp = interface_flux_matrices(grid, HI)
        GD2 = (Gp - Gm) @ D2 * sigma
        eta_lo, eta_hi = layout.index("eta_lo"), layout.index("eta_hi")
        mass[h] = 1.0
        _emit(coo, h, Fp, eta_hi.ravel()[0])
        _emit(coo, h, -Fm, eta_lo.ravel()[0])
        _emit(coo, h, GD2, h[0])
        if couple_stokes:
            coo.add(h, u2lo[:, -1], -0.5)
            coo.add(h, u2hi[:, 0], -0.5)
        for s, eta in ((LO, eta_lo), (HI, eta_hi)):
            L, B = laplace_fv(grid, s)
            vol = grid.cell_volume(s)
            _emit(coo, eta.ravel(), L, eta.ravel()[0], 1.0 / vol)
            _emit(coo, eta.ravel(), B @ D2, h[0], sigma / vol)
            row_scale[eta.ravel()] = vol
            pot.append(eta.ravel())
            blocks[f"L{s}"] = (L, B)
        blocks["flux"] = ((Fm, Gm), (Fp, Gp))
    else:
        for name in ("h", "eta_lo", "eta_hi"):
            idx = layout.index(name).ravel()
            coo.add(idx, idx, 1.0)
            pot.append(idx)

    K = coo.tocsr()
    cat = lambda xs: np.concatenate([np.ravel(x) for x in xs]) if xs else np.zeros(0, int)
    rows = RowGroups(
        momentum=cat(momentum),
        dirichlet=cat(dirichlet),
        glue=cat(glue),
        tangential=cat(tang),
        normal=cat(normal),
        wall_stress=cat(wall),
        divergence=cat(div),
        jump=np.asarray(jp),
        mean=np.array([c]),
        height=np.asarray(h) if include_ms else np.zeros(0, int),
        potential=cat(pot) if include_ms else np.zeros(0, int),
        row_scale=row_scale,
    )
    owned = np.concatenate(
        [rows.momentum, rows.dirichlet, rows.glue, rows.tangential, rows.normal, rows.wall_stress,
         rows.divergence, rows.jump, rows.mean, cat([layout.index(n) for n in ("h", "eta_lo", "eta_hi")])]
    )
    if owned.size != N or np.unique(owned).size != N:
        from .errors import AssemblyError

        raise AssemblyError(f"row ownership covers {np.unique(owned).size} of {N} unknowns")
    return CoupledOperator(layout, params, K, mass, rows, couple_stokes, blocks)


def zero_data_fields(grid: GridSpec) -> dict:
    """Zero arrays for every data slot of the linear problem."""
    nx = grid.nx
    return {
        "g1": {f"{b}_{t}": np.zeros(layout_for(grid).shapes[f"{b}_{t}"]) for b in ("u1", "u2") for t in ("lo", "hi")},
        "g2": (np.zeros((nx, grid.ny_lo)), np.zeros((nx, grid.ny_hi))),
        "g3": np.zeros(nx + 1),
        "g4": np.zeros(nx),
        "g5": (np.zeros(nx + 1), np.zeros(nx)),
        "g6": np.zeros(nx),
        "g7": np.zeros(2),
        "g8": (np.zeros((nx, grid.ny_lo)), np.zeros((nx, grid.ny_hi))),
        "g9": np.zeros(nx),
        "g10": {
            "left_lo": np.zeros(grid.ny_lo), "right_lo": np.zeros(grid.ny_lo),
            "left_hi": np.zeros(grid.ny_hi), "right_hi": np.zeros(grid.ny_hi),
            "bottom": np.zeros(nx), "top": np.zeros(nx),
        },
        "g11": (np.zeros((2, grid.ny_lo + 1)), np.zeros((2, grid.ny_hi + 1))),
        "g12": (np.zeros((2, grid.ny_lo)), np.zeros((2, grid.ny_hi))),
        "g13": {"u1_bottom": np.zeros(nx + 1), "u1_top": np.zeros(nx + 1),
                "u2_bottom": np.zeros(nx), "u2_top": np.zeros(nx)},
    }


def _field(fields, key, default_fields):
    v = fields.get(key) if fields is not None else None
    return default_fields[key] if v is None else v


def build_rhs(op: CoupledOperator, fields: dict | None = None, curvature=None) -> np.ndarray:
    """Right-hand side vector for the rows of ``op`` from named data slots.

    ``fields`` follows :func:`zero_data_fields`; missing slots are zero.
    ``curvature`` is the ``sigma h''`` data of the normal-stress row for a
    Stokes-only operator (``include_ms=False`` or ``couple_stokes=False``).
    """
    layout = op.layout
    grid = layout.grid
    nx, dx = grid.nx, grid.dx
    sigma = op.params.sigma
    z0 = zero_data_fields(grid)
    f = {k: _field(fields, k, z0) for k in z0}
    b = np.zeros(layout.size)
    V = lambda name: layout.view(b, name)

    for name, g in f["g1"].items():
        g = np.asarray(g, dtype=float)
        if name.startswith("u1"):
            V(name)[1:-1, :] = g[1:-1, :]
        else:
            V(name)[:, 1:-1] = g[:, 1:-1]
    for s, tag in ((LO, "lo"), (HI, "hi")):
        g12 = np.asarray(f["g12"][s], dtype=float)
        V(f"u1_{tag}")[0, :] = -g12[0]
        V(f"u1_{tag}")[-1, :] = g12[1]
        V(f"p_{tag}")[...] = f["g2"][s]
        wall = np.asarray(f["g11"][s], dtype=float)
        if s == LO:
            V("s2_lo")[:, 1:] = wall[:, 1:]
        else:
            V("s2_hi")[:, :-1] = wall[:, :-1]
    g13 = f["g13"]
    V("u2_lo")[:, 0] = g13["u2_bottom"]
    V("u2_hi")[:, -1] = g13["u2_top"]
    V("t1_lo")[:, 0] = g13["u1_bottom"]
    V("t1_hi")[:, 1] = g13["u1_top"]
    V("s2_lo")[:, 0] = [g13["u2_bottom"][0], g13["u2_bottom"][-1]]
    V("s2_hi")[:, -1] = [g13["u2_top"][0], g13["u2_top"][-1]]
    # contact points carry the adjacent wall normal velocity
    g12lo, g12hi = np.asarray(f["g12"][LO]), np.asarray(f["g12"][HI])
    V("t1_lo")[[0, -1], 1] = [-g12lo[0, -1], g12lo[1, -1]]
    V("t1_hi")[[0, -1], 0] = [-g12hi[0, 0], g12hi[1, 0]]

    g5_1, g5_2 = f["g5"]
    V("t1_lo")[1:-1, 1] = np.asarray(g5_1)[1:-1]
    V("u2_lo")[:, -1] = g5_2
    V("t1_hi")[1:-1, 0] = np.asarray(f["g3"])[1:-1]

    slopes = np.asarray(f["g7"], dtype=float)
    src = slope_source(nx, dx, slopes)
    normal = np.asarray(f["g4"], dtype=float).copy()
    if op.couple_stokes:
        normal += sigma * src
    elif curvature is not None:
        normal += curvature
    if curvature is not None and op.couple_stokes:
        raise ValueError("curvature data only apply to an uncoupled normal-stress row")
    V("u2_hi")[:, 0] = normal

    if "flux" in op.blocks:
        (Fm, Gm), (Fp, Gp) = op.blocks["flux"]
        const_sigma = sigma * src + np.asarray(f["g9"], dtype=float)
        V("h")[...] = np.asarray(f["g6"], dtype=float) - (Gp - Gm) @ const_sigma
        g10 = f["g10"]
        for s, tag in ((LO, "lo"), (HI, "hi")):
            L, B = op.blocks[f"L{s}"]
            ny, dy = grid.ny(s), grid.dy(s)
            vol = dx * dy
            neu = np.zeros((nx, ny))
            neu[0, :] += np.asarray(g10[f"left_{tag}"]) * dy
            neu[-1, :] += np.asarray(g10[f"right_{tag}"]) * dy
            if s == LO:
                neu[:, 0] += np.asarray(g10["bottom"]) * dx
            else:
                neu[:, -1] += np.asarray(g10["top"]) * dx
            rhs = np.asarray(f["g8"][s], dtype=float) - neu / vol - (B @ const_sigma).reshape(nx, ny) / vol
            V(f"eta_{tag}")[...] = rhs
    return b


def gauss_mismatch(grid: GridSpec, fields: dict | None = None) -> tuple[float, float]:
    """Discrete divergence theorem defect of the velocity data.

    Returns ``(mismatch, scale)`` where ``mismatch`` is the integral of the
    divergence data minus the boundary flux implied by the wall, outer and
    glue data.
    """
    z0 = zero_data_fields(grid)
    f = {k: _field(fields, k, z0) for k in z0}
    dx = grid.dx
    total = 0.0
    scale = 0.0
    flux = 0.0
    for s in (LO, HI):
        vol = grid.cell_volume(s)
        g2 = np.asarray(f["g2"][s], dtype=float)
        total += g2.sum() * vol
        scale = max(scale, np.abs(g2).sum() * vol)
        g12 = np.asarray(f["g12"][s], dtype=float)
        flux += (g12[0].sum() + g12[1].sum()) * grid.dy(s)
    g13 = f["g13"]
    flux += (np.sum(g13["u2_top"]) + np.sum(g13["u2_bottom"]) * -1.0) * dx
    flux -= np.sum(f["g5"][1]) * dx
    return float(total - flux), float(max(1.0, scale, abs(flux)))
