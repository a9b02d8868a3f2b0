"""Linearisation about the flat equilibrium and its spectrum.

The pencil ``lambda M z = -K z`` is the coupled operator of the linear
step with zero data.  The reduction to a dense ordinary eigenproblem keeps
only the dynamic unknowns: velocities enter through a discrete stream
function (so the divergence rows hold identically and the pressure drops out
of the Galerkin-projected momentum equations), the massless trace unknowns
are condensed, and the chemical potential is eliminated through its
Dirichlet problem.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import CoupledOperator, assemble_operator
from .errors import AssemblyError, BadMode, EigenFailure, EliminationSingular
from .geometry import HI, LO, DomainSpec, GridSpec
from .operators import Coo
from .state import FluidParams, Layout

__all__ = [
    "Pencil",
    "SpectralResult",
    "SpectrumReport",
    "assemble_pencil",
    "reduce_and_eigen",
    "qz_eigenvalues",
    "ms_dispersion",
    "ms_eigenvalues",
    "verify_spectrum",
    "spectrum",
]


@dataclass
class Pencil:
    """``lambda M z = -K z`` over the full unknown vector."""

    params: FluidParams
    grid: GridSpec
    M: sp.dia_matrix
    K: sp.csr_matrix
    op: CoupledOperator = field(repr=False)

    @property
    def rank_M(self) -> int:
        return int(np.count_nonzero(self.M.diagonal()))


def assemble_pencil(params: FluidParams, grid: GridSpec, couple_stokes: bool = True) -> Pencil:
    """Mass and stiffness blocks of the linearised problem.

    ``M`` is diagonal with ``rho`` on interior momentum rows, ``1`` on the
    height rows and ``0`` on every algebraic row.
    """
    op = assemble_operator(grid, params, couple_stokes=couple_stokes)
    if not np.all(np.isfinite(op.K.data)):
        raise AssemblyError("non-finite entries in the stiffness block")
    return Pencil(params, grid, sp.diags(op.mass), op.K.tocsr(), op)


# -- reduction ------------------------------------------------------------------


def stream_basis(layout: Layout) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Discrete curl of node stream-function values.

    Returns ``(C, Ceq)``.  ``C`` maps interior node values (zero on the outer
    boundary, including the interface row) to the full velocity vector;
    ``Ceq`` is the same map with the lower interface copy of ``u2`` removed,
    used to select the momentum and normal-stress equations.
    """
    grid = layout.grid
    nx, dx = grid.nx, grid.dx
    nyt = grid.ny_lo + grid.ny_hi
    node = -np.ones((nx + 1, nyt + 1), dtype=int)
    node[1:-1, 1:-1] = np.arange((nx - 1) * (nyt - 1)).reshape(nx - 1, nyt - 1)
    n_psi = (nx - 1) * (nyt - 1)
    C = Coo((layout.size, n_psi))
    skip = set(layout.index("u2_lo")[:, -1].tolist())

    def add(rows, cols, vals):
        ok = cols >= 0
        C.add(rows[ok], cols[ok], vals[ok] if np.ndim(vals) else np.full(ok.sum(), vals))

    for s, off in ((LO, 0), (HI, grid.ny_lo)):
        tag = "lo" if s == LO else "hi"
        ny, dy = grid.ny(s), grid.dy(s)
        u1 = layout.index(f"u1_{tag}")
        u2 = layout.index(f"u2_{tag}")
        i, j = np.meshgrid(np.arange(nx + 1), np.arange(ny), indexing="ij")
        r = u1[i, j].ravel()
        add(r, node[i, off + j + 1].ravel(), np.full(r.size, 1.0 / dy))
        add(r, node[i, off + j].ravel(), np.full(r.size, -1.0 / dy))
        i, j = np.meshgrid(np.arange(nx), np.arange(ny + 1), indexing="ij")
        r = u2[i, j].ravel()
        add(r, node[i + 1, off + j].ravel(), np.full(r.size, -1.0 / dx))
        add(r, node[i, off + j].ravel(), np.full(r.size, 1.0 / dx))
    Cm = C.tocsr()
    keep = np.ones(layout.size)
    keep[list(skip)] = 0.0
    Ceq = sp.diags(keep) @ Cm
    return Cm, Ceq.tocsr()


def _trace_columns(layout: Layout) -> np.ndarray:
    return np.concatenate([layout.index(n).ravel() for n in ("t1_lo", "t1_hi", "s2_lo", "s2_hi")])


def _reduced_blocks(pencil: Pencil, with_flow: bool = True):
    """Dense ``(Mr, Kr, Z)`` on ``(psi, h)`` with ``Z`` the lift to full unknowns."""
    op, lay = pencil.op, pencil.op.layout
    K = pencil.K.tocsr()
    rs = op.rows.row_scale
    mass = op.mass
    h = lay.index("h")
    eta = np.concatenate([lay.index("eta_lo").ravel(), lay.index("eta_hi").ravel()])
    nh = h.size
    N = lay.size

    # chemical potential slaved to h
    try:
        lu_eta = spla.splu(K[eta][:, eta].tocsc())
    except RuntimeError as exc:
        raise EliminationSingular(f"potential block: {exc}") from exc
    Zeta = -lu_eta.solve(K[eta][:, h].toarray())
    Zh = np.zeros((N, nh))
    Zh[h, np.arange(nh)] = 1.0
    Zh[eta, :] = Zeta

    if with_flow:
        C, Ceq = stream_basis(lay)
        tcols = _trace_columns(lay)
        Ktt = K[tcols][:, tcols].tocsc()
        try:
            lu_t = spla.splu(Ktt)
        except RuntimeError as exc:
            raise EliminationSingular(f"trace block: {exc}") from exc
        Cd = C.toarray()
        Cd[tcols, :] = -lu_t.solve((K[tcols] @ C).toarray())
        W = (sp.diags(rs) @ Ceq).T.tocsr()  # test functions, integrated rows
        Mpsi = (W @ sp.diags(mass) @ C).toarray()
        KC = K @ Cd
        Kpp = W @ KC
        Kph = W @ (K @ Zh)
        Khp = KC[h, :]
        # jp is slaved to p by its row, so test the combined pressure columns
        jp = lay.index("jp")
        pc = np.concatenate([lay.index("p_lo").ravel(), lay.index("p_hi").ravel()])
        dj = -sp.csr_matrix(K[jp][:, pc])  # jp - p_hi(0) + p_lo(top) = 0
        leak = W @ (K[:, pc] + K[:, jp] @ dj)
        scale = max(1.0, float(np.max(np.abs(Kpp))))
        if np.max(np.abs(leak.toarray())) > 1e-8 * scale:
            raise EliminationSingular("pressure does not drop out of the projected momentum rows")
        Z = np.hstack([Cd, Zh])
    else:
        Mpsi = np.zeros((0, 0))
        Kpp = np.zeros((0, 0))
        Kph = np.zeros((0, nh))
        Khp = np.zeros((nh, 0))
        Z = Zh
    Khh = (K @ Zh)[h, :]
    Mh = np.diag(mass[h])
    Mr = sla.block_diag(Mpsi, Mh)
    Kr = np.block([[Kpp, Kph], [Khp, Khh]])
    return Mr, Kr, Z


@dataclass
class SpectralResult:
    """Eigenvalues of ``-A`` (evolution ``z' = -A z``) on ``(psi, h)``."""

    eigenvalues: np.ndarray
    zero_index: int
    kernel_vector: tuple
    gap: float
    grid: GridSpec
    params: FluidParams
    zero_tol: float
    operator: np.ndarray | None = field(default=None, repr=False)
    zero_vector: np.ndarray | None = field(default=None, repr=False)
    n_psi: int = 0

    @property
    def nonzero(self) -> np.ndarray:
        mask = np.ones(self.eigenvalues.size, bool)
        if self.zero_index >= 0:
            mask[self.zero_index] = False
        return self.eigenvalues[mask]

    @property
    def n_zero(self) -> int:
        return int(np.sum(np.abs(self.eigenvalues) <= self.zero_tol))


def _kernel_parts(vec, n_psi, Z, lay):
    full = Z @ vec
    u = full[: lay.n_velocity]
    hpart = full[lay.slices["h"]]
    return np.real_if_close(u), np.real_if_close(hpart)


def reduce_and_eigen(pencil: Pencil, zero_rel: float = 1e-8, with_flow: bool = True) -> SpectralResult:
    """Dense eigen-decomposition of the reduced operator.

    ``with_flow=False`` drops the velocity unknowns, which leaves the
    decoupled Mullins-Sekerka operator on ``h``.
    """
    Mr, Kr, Z = _reduced_blocks(pencil, with_flow)
    try:
        A = -np.linalg.solve(Mr, Kr)
    except np.linalg.LinAlgError as exc:
        raise EliminationSingular(f"reduced mass matrix: {exc}") from exc
    try:
        lam = sla.eigvals(A, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigenFailure(str(exc)) from exc
    if not np.all(np.isfinite(lam)):
        raise EigenFailure("non-finite eigenvalues")
    lam = lam[np.lexsort((lam.imag, -lam.real))]
    tol = zero_rel * float(np.max(np.abs(lam)))
    iz = int(np.argmin(np.abs(lam)))
    zi = iz if abs(lam[iz]) <= tol else -1
    n_psi = Mr.shape[0] - pencil.grid.nx
    v0 = None
    if zi >= 0:
        others = np.abs(np.delete(lam, zi))
        v0 = _null_vector(A, lam[zi], 0.01 * float(np.min(others)) if others.size else 1.0)
        kv = _kernel_parts(v0, n_psi, Z, pencil.op.layout)
    else:
        kv = (np.zeros(0), np.zeros(0))
    rest = np.delete(lam, zi) if zi >= 0 else lam
    gap = float(-np.max(rest.real)) if rest.size else np.nan
    return SpectralResult(lam, zi, kv, gap, pencil.grid, pencil.params, tol, A, v0, n_psi)


def _null_vector(A: np.ndarray, lam0: complex, offset: float, iters: int = 8, transpose: bool = False) -> np.ndarray:
    """Eigenvector for ``lam0`` by inverse iteration shifted by ``offset``.

    ``transpose=True`` returns the left eigenvector.
    """
    n = A.shape[0]
    shift = lam0.real - offset
    lu = sla.lu_factor(A - shift * np.eye(n), check_finite=False)
    x = np.random.default_rng(0).standard_normal(n)
    for _ in range(iters):
        x = sla.lu_solve(lu, x, trans=int(transpose), check_finite=False)
        x /= np.linalg.norm(x)
    return x


def qz_eigenvalues(pencil: Pencil, cutoff: float = 1e10) -> np.ndarray:
    """Finite eigenvalues of the full pencil by QZ, sorted by real part."""
    M = pencil.M.toarray()
    K = pencil.K.toarray()
    try:
        w = sla.eig(-K, M, right=False, homogeneous_eigvals=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigenFailure(str(exc)) from exc
    alpha, beta = w
    finite = np.abs(beta) > np.abs(alpha) / cutoff
    lam = alpha[finite] / beta[finite]
    return lam[np.lexsort((lam.imag, -lam.real))]


# -- analytic dispersion --------------------------------------------------------


def _mode_number(k: float, domain: DomainSpec) -> int:
    m = k * domain.width / np.pi
    mi = int(round(m))
    if mi < 1 or abs(m - mi) > 1e-9 * max(1.0, m):
        raise BadMode(f"k = {k} is not m*pi/W with integer m >= 1 (m = {m:.6g})")
    return mi


def ms_dispersion(k, params: FluidParams, domain: DomainSpec, check_mode: bool = True) -> float:
    """Decay rate ``sigma k^3 (tanh(k L2) + tanh(k |L1|))`` of mode ``cos(kx)``."""
    k = float(k)
    if check_mode:
        _mode_number(k, domain)
    return params.sigma * k**3 * (np.tanh(k * domain.L2) + np.tanh(k * abs(domain.L1)))


def ms_eigenvalues(params: FluidParams, grid: GridSpec) -> np.ndarray:
    """Eigenvalues of ``-A`` for the decoupled Mullins-Sekerka block, largest first."""
    res = reduce_and_eigen(assemble_pencil(params, grid, couple_stokes=False), with_flow=False)
    return res.eigenvalues


# -- verification ---------------------------------------------------------------


@dataclass
class SpectrumReport:
    checks: dict
    details: dict

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def __str__(self):
        return "\n".join(f"{'ok  ' if v else 'FAIL'} {k}: {self.details.get(k, '')}" for k, v in self.checks.items())


def verify_spectrum(
    result: SpectralResult,
    ms_cells: int | None = 128,
    ms_tol: float = 0.02,
    kernel_tol: float = 1e-6,
    axis_tol: float = 1e-6,
    jordan_floor: float = 1e-6,
) -> SpectrumReport:
    """Structural checks on a computed spectrum.

    ``zero_mode``: exactly one eigenvalue below the zero tolerance with a
    kernel vector that has no velocity and constant height.
    ``stable``: every other eigenvalue has ``Re <= -gap < 0`` and none lies
    within ``axis_tol`` of the imaginary axis.
    ``semisimple``: the left and right zero eigenvectors overlap by more
    than ``jordan_floor`` (cosine), so no Jordan partner exists.
    ``ms_dispersion``: the lowest three decoupled modes on ``ms_cells``
    cells match the analytic rates within ``ms_tol`` (skipped when
    ``ms_cells`` is 0 or None).
    """
    checks, details = {}, {}
    nz = result.n_zero
    ok = nz == 1 and result.zero_index >= 0
    u, h = result.kernel_vector
    if ok:
        hn = float(np.linalg.norm(h))
        un = float(np.linalg.norm(u))
        hdev = float(np.max(np.abs(h - np.mean(h))) / max(np.max(np.abs(h)), 1e-300))
        ok = hn > 0 and un <= kernel_tol * hn and hdev <= kernel_tol
        details["zero_mode"] = f"n_zero={nz} |u|/|h|={un / max(hn, 1e-300):.2e} h-dev={hdev:.2e}"
    else:
        details["zero_mode"] = f"n_zero={nz}"
    checks["zero_mode"] = bool(ok)

    rest = result.nonzero if result.zero_index >= 0 else result.eigenvalues
    small = rest[np.abs(rest) <= result.zero_tol]
    stable = rest.size > 0 and small.size == 0 and result.gap > 0 and float(np.min(np.abs(rest.real))) > axis_tol
    details["stable"] = f"gap={result.gap:.6g} min|Re|={float(np.min(np.abs(rest.real))) if rest.size else np.nan:.3e}"
    checks["stable"] = bool(stable)

    if result.operator is not None and result.zero_index >= 0:
        # a simple eigenvalue has left and right eigenvectors that are not
        # orthogonal; a Jordan block makes them orthogonal.  Inverse iteration
        # on a Jordan block leaves an overlap of order shift/|A|, so the shift
        # is kept far below jordan_floor.
        A = result.operator
        v0 = result.zero_vector
        off = 1e-3 * jordan_floor * float(np.max(np.abs(result.eigenvalues)) or 1.0)
        w0 = _null_vector(A, result.eigenvalues[result.zero_index], off, transpose=True)
        r = float(abs(w0 @ v0) / (np.linalg.norm(w0) * np.linalg.norm(v0)))
        checks["semisimple"] = r > jordan_floor
        details["semisimple"] = f"left/right overlap={r:.3e}"
    else:
        checks["semisimple"] = False
        details["semisimple"] = "no operator or no zero mode"

    if not ms_cells:
        return SpectrumReport(checks, details)
    g = result.grid
    ms_grid = GridSpec(g.domain, ms_cells, ms_cells // 2, ms_cells // 2)
    lam = np.sort(-ms_eigenvalues(result.params, ms_grid).real)
    lam = lam[lam > 1e-8 * lam[-1]][:3]
    exact = np.array([ms_dispersion(m * np.pi / g.domain.width, result.params, g.domain) for m in (1, 2, 3)])
    rel = np.abs(lam - exact) / exact
    checks["ms_dispersion"] = bool(lam.size == 3 and np.all(rel <= ms_tol))
    details["ms_dispersion"] = "rel err " + ", ".join(f"{e:.2e}" for e in rel)
    return SpectrumReport(checks, details)


def spectrum(params: FluidParams, grid: GridSpec) -> SpectralResult:
    """Shorthand for ``reduce_and_eigen(assemble_pencil(params, grid))``."""
    return reduce_and_eigen(assemble_pencil(params, grid))
