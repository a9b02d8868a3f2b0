"""Coupled linear step, block splitting, fixed-point stepper and driver.

One backward-Euler step of the linear problem is a single sparse solve over
every unknown.  The nonlinear stepper evaluates all transformed-frame
defects at the current iterate, feeds them to the linear step as data and
repeats until the update is below tolerance.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import assemble_operator, build_rhs, gauss_mismatch, zero_data_fields
from .diagnostics import DiagnosticsSeries, record
from .errors import (
    IncompatibleData,
    IncompatibleDivergence,
    MapNotInvertible,
    MsnsError,
    NoConvergence,
    SolveFailure,
    ValidationError,
)
from .geometry import HI, LO, DomainSpec, GridSpec, hanzawa_coeffs, make_bump
from .nonlinear import NonlinearRHS, g_d, g_stress, nonlinear_rhs
from .operators import second_difference
from .state import FluidParams, Layout, State

__all__ = [
    "LinearData",
    "SimConfig",
    "CompatibilityReport",
    "LinearSolver",
    "SplittingInfo",
    "SimulationResult",
    "check_compatibility",
    "linear_step",
    "splitting_step",
    "nonlinear_step",
    "simulate",
    "rhs_fields",
]

log = logging.getLogger(__name__)


# -- data containers ------------------------------------------------------------


@dataclass
class LinearData:
    """Data slots ``g1 ... g13`` of one linear step and the previous state.

    ``fields`` follows :func:`msns.assembly.zero_data_fields`; ``g7`` is the
    pair of end slopes.  ``prev`` supplies ``u0`` and ``h0``.
    """

    grid: GridSpec
    fields: dict
    prev: State

    @classmethod
    def zeros(cls, grid: GridSpec, prev: State | None = None) -> "LinearData":
        return cls(grid, zero_data_fields(grid), prev if prev is not None else State(grid))

    def scaled(self, factor: float) -> "LinearData":
        def sc(v):
            if isinstance(v, dict):
                return {k: sc(x) for k, x in v.items()}
            if isinstance(v, tuple):
                return tuple(sc(x) for x in v)
            return factor * np.asarray(v, dtype=float)

        prev = State(self.grid, factor * self.prev.z, self.prev.t)
        return LinearData(self.grid, sc(self.fields), prev)

    def check(self, tol: float = 1e-8):
        g6 = np.asarray(self.fields["g6"], dtype=float)
        scale = max(1.0, float(np.max(np.abs(g6))) if g6.size else 0.0)
        if abs(float(np.mean(g6))) > tol * scale:
            raise IncompatibleData(f"g6 has mean {np.mean(g6):.3e}; the kinematic forcing must be mean free")
        mismatch, sc = gauss_mismatch(self.grid, self.fields)
        if abs(mismatch) > tol * sc:
            raise IncompatibleDivergence(f"divergence data exceed boundary flux by {mismatch:.3e}")


@dataclass
class SimConfig:
    """Everything needed for one nonlinear run."""

    params: FluidParams = field(default_factory=FluidParams)
    domain: DomainSpec = field(default_factory=DomainSpec)
    grid: GridSpec | None = None
    dt: float | None = None
    t_end: float = 1.0
    max_iters: int = 8
    tol: float = 1e-10
    density_mode: str = "equal"
    couple_stokes: bool = True
    dissipation_factor: float = 1.0
    d0: float | None = None
    save_every: int = 0
    accel: str = "none"
    predictor: bool = True
    anderson_depth: int = 3
    outputs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.grid is None:
            self.grid = GridSpec(self.domain, 32, 16, 16)
        if self.grid.domain != self.domain:
            raise ValidationError("grid.domain differs from domain")
        if self.dt is None:
            self.dt = default_dt(self.params, self.grid)
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValidationError(f"time.dt must be > 0, got {self.dt}")
        if not (self.t_end >= 0):
            raise ValidationError(f"time.t_end must be >= 0, got {self.t_end}")
        if not (self.tol > 0):
            raise ValidationError(f"solver.tol must be > 0, got {self.tol}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValidationError(f"solver.max_iters must be an integer >= 1, got {self.max_iters}")
        if self.density_mode not in ("equal", "general"):
            raise ValidationError(f"solver.density_mode must be 'equal' or 'general', got {self.density_mode!r}")
        if self.density_mode == "equal" and not self.params.equal_density:
            raise ValidationError("density_mode 'equal' needs rho_plus == rho_minus")
        if self.accel not in ("anderson", "none"):
            raise ValidationError(f"solver.accel must be 'anderson' or 'none', got {self.accel!r}")
        if self.dissipation_factor not in (1, 2, 1.0, 2.0):
            raise ValidationError("solver.dissipation_factor must be 1 or 2")
        if self.d0 is None:
            self.d0 = make_bump(self.domain).default_d0

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def with_(self, **kw) -> "SimConfig":
        return replace(self, **kw)


def default_dt(params: FluidParams, grid: GridSpec) -> float:
    """``0.1 / lambda_max`` with the fastest resolved dispersion rate."""
    from .spectral import ms_dispersion

    k = np.pi * grid.nx / grid.domain.width
    return 0.1 / ms_dispersion(k, params, grid.domain, check_mode=False)


# -- linear step ----------------------------------------------------------------


class LinearSolver:
    """Backward-Euler matrix ``mass/dt + K`` with a cached sparse LU."""

    def __init__(self, grid: GridSpec, params: FluidParams, dt: float, couple_stokes: bool = True):
        if not (dt > 0):
            raise ValidationError(f"dt must be > 0, got {dt}")
        self.grid, self.params, self.dt = grid, params, float(dt)
        self.op = assemble_operator(grid, params, couple_stokes=couple_stokes)
        self.A = self.op.backward_euler(dt)
        try:
            self.lu = spla.splu(self.A)
        except RuntimeError as exc:
            raise SolveFailure(f"coupled factorization failed: {exc}") from exc

    def solve_fields(self, fields: dict, prev: State) -> State:
        b = build_rhs(self.op, fields)
        # increment form keeps a stationary state exactly stationary
        delta = self.lu.solve(b - self.op.K @ prev.z)
        if not np.all(np.isfinite(delta)):
            raise SolveFailure("non-finite solution of the coupled step")
        return State(self.grid, prev.z + delta, prev.t + self.dt, prev.d0)


_SOLVERS: dict = {}


def _solver(grid, params, dt, couple_stokes=True) -> LinearSolver:
    key = (grid, params, float(dt), bool(couple_stokes))
    if key not in _SOLVERS:
        if len(_SOLVERS) > 8:
            _SOLVERS.clear()
        _SOLVERS[key] = LinearSolver(grid, params, dt, couple_stokes)
    return _SOLVERS[key]


def linear_step(
    data: LinearData, params: FluidParams, grid: GridSpec, dt: float, couple_stokes: bool = True, validate: bool = True
) -> State:
    """Monolithic backward-Euler step of the coupled linear problem.

    ``couple_stokes=False`` removes the flow/interface coupling, so the
    height evolves by the Mullins-Sekerka block alone.
    """
    if validate:
        data.check()
    return _solver(grid, params, dt, couple_stokes).solve_fields(data.fields, data.prev)


@dataclass
class SplittingInfo:
    updates: list
    factors: list


def splitting_step(
    data: LinearData, params: FluidParams, grid: GridSpec, dt: float, sweeps: int = 8, validate: bool = True
):
    """Block Gauss-Seidel version of :func:`linear_step`.

    The height/potential block is solved first with the flow switched off,
    then the Stokes block with the resulting curvature force, followed by
    ``sweeps`` correction passes alternating the two blocks.  Returns
    ``(state, SplittingInfo)``; raises :class:`NoConvergence` when an update
    grows.
    """
    if validate:
        data.check()
    solver = _solver(grid, params, dt, True)
    lay = solver.op.layout
    n = lay.n_stokes
    A = solver.A.tocsr()
    b = build_rhs(solver.op, data.fields) - solver.op.K @ data.prev.z
    Ass, Asm = A[:n, :n].tocsc(), A[:n, n:]
    Ams, Amm = A[n:, :n], A[n:, n:].tocsc()
    lu_s, lu_m = spla.splu(Ass), spla.splu(Amm)
    m = lu_m.solve(b[n:])
    s = lu_s.solve(b[:n] - Asm @ m)
    updates, factors = [], []
    for _ in range(int(sweeps)):
        m_new = lu_m.solve(b[n:] - Ams @ s)
        s_new = lu_s.solve(b[:n] - Asm @ m_new)
        upd = max(np.max(np.abs(m_new - m)), np.max(np.abs(s_new - s)))
        m, s = m_new, s_new
        # below this the sweeps only move round-off
        floor = 1e-10 * max(np.max(np.abs(m)), np.max(np.abs(s)), 1e-300)
        if updates and updates[-1] > 0:
            factors.append(upd / updates[-1])
            if upd > updates[-1] and upd > floor:
                raise NoConvergence(f"splitting sweep update grew from {updates[-1]:.3e} to {upd:.3e}")
        updates.append(upd)
        if upd <= floor:
            break
    z = data.prev.z + np.concatenate([s, m])
    return State(grid, z, data.prev.t + dt, data.prev.d0), SplittingInfo(updates, factors)


# -- nonlinear step -------------------------------------------------------------


def rhs_fields(R: NonlinearRHS, grid: GridSpec) -> dict:
    """Map the nonlinearities onto the data slots of the linear step.

    The wall defect is replaced by zero, which is exact for states obeying
    the wall and contact-angle conditions.
    """
    f = zero_data_fields(grid)
    f["g1"] = R.f_u
    f["g2"] = R.g_d
    f["g3"] = R.g_s_par
    f["g4"] = R.g_s_perp
    f["g6"] = R.g_sigma
    f["g8"] = R.g_c
    f["g9"] = R.g_kappa
    f["g10"] = R.g_n
    return f


class _Anderson:
    """Anderson mixing of fixed-point iterates ``z -> F(z)`` (type II).

    Any affine combination of iterates keeps the mean height, so the
    conservation property of the plain iteration carries over.
    """

    def __init__(self, depth: int):
        self.depth = int(depth)
        self.dF, self.dR = [], []
        self.last = None

    def update(self, z, fz):
        r = fz - z
        if self.last is not None and self.depth > 0:
            f0, r0 = self.last
            self.dF.append(fz - f0)
            self.dR.append(r - r0)
            if len(self.dF) > self.depth:
                self.dF.pop(0)
                self.dR.pop(0)
        self.last = (fz.copy(), r.copy())
        if not self.dR:
            return fz
        dR = np.column_stack(self.dR)
        gamma, *_ = np.linalg.lstsq(dR, r, rcond=None)
        return fz - np.column_stack(self.dF) @ gamma


def _check_height(h, d0):
    m = float(np.max(np.abs(h)))
    if not np.isfinite(m) or m > d0:
        raise MapNotInvertible(f"max|h| = {m:.4g} exceeds the admissibility bound d0 = {d0:.4g}")


def nonlinear_step(state_prev: State, cfg: SimConfig, dh_dt=None, chi=None) -> State:
    """Advance one step by fixed-point iteration on the lagged nonlinearities.

    Stops when the max-norm update relative to the iterate is below
    ``cfg.tol`` or after ``cfg.max_iters`` linear solves.  The returned state
    carries ``meta["iterations"]``, ``meta["updates"]`` and ``meta["dh_dt"]``.
    """
    grid, params, dt = cfg.grid, cfg.params, cfg.dt
    chi = chi or make_bump(grid.domain)
    solver = _solver(grid, params, dt, cfg.couple_stokes)
    _check_height(state_prev.h, cfg.d0)
    h_prev = state_prev.h.copy()
    dh = np.zeros(grid.nx) if dh_dt is None else np.asarray(dh_dt, dtype=float)
    zk = state_prev
    dz = state_prev.meta.get("dz") if cfg.predictor else None
    if dz is not None:
        # extrapolate from the previous increments: quadratic when two are
        # known, linear otherwise
        dz_old = state_prev.meta.get("dz_old")
        guess = dz if dz_old is None else 2.0 * dz - dz_old
        zk = State(grid, state_prev.z + guess, state_prev.t, state_prev.d0)
        if np.max(np.abs(zk.h)) > cfg.d0:
            zk = state_prev
        dh = (zk.h - h_prev) / dt
    updates = []
    acc = _Anderson(cfg.anderson_depth) if cfg.accel == "anderson" else None
    for k in range(cfg.max_iters):
        _check_height(zk.h, cfg.d0)
        coeffs = hanzawa_coeffs(zk.h, chi, grid)
        R = nonlinear_rhs(zk, coeffs, params, dh)
        fz = solver.solve_fields(rhs_fields(R, grid), state_prev)
        diff = float(np.max(np.abs(fz.z - zk.z)))
        size = float(np.max(np.abs(fz.z)))
        upd = diff / size if size > 0 else 0.0
        updates.append(upd)
        if upd <= cfg.tol:
            zk = fz
        else:
            if acc is not None:
                fz.z = acc.update(zk.z, fz.z)
            zk = fz
        dh = (zk.h - h_prev) / dt
        if upd <= cfg.tol:
            break
    else:
        if len(updates) >= 2 and updates[-1] > updates[-2]:
            raise NoConvergence(
                f"fixed-point updates grew ({updates[-2]:.3e} -> {updates[-1]:.3e}); reduce dt"
            )
    _check_height(zk.h, cfg.d0)
    zk.meta = {"iterations": len(updates), "updates": updates, "dh_dt": dh, "dz": zk.z - state_prev.z,
               "dz_old": state_prev.meta.get("dz") if cfg.predictor else None}
    return zk


# -- compatibility ------------------------------------------------------------


@dataclass
class CompatibilityReport:
    residuals: dict
    tolerances: dict

    @property
    def passed(self) -> bool:
        return all(self.residuals[k] <= self.tolerances[k] for k in self.residuals)

    @property
    def failed(self) -> list[str]:
        return [k for k in self.residuals if self.residuals[k] > self.tolerances[k]]

    def __str__(self):
        lines = []
        for k, v in self.residuals.items():
            tag = "ok  " if v <= self.tolerances[k] else "FAIL"
            lines.append(f"{tag} {k:22s} residual={v:.3e} tol={self.tolerances[k]:.3e}")
        return "\n".join(lines)


COMPAT_CONDITIONS = (
    "divergence",
    "tangential_stress",
    "velocity_jump",
    "wall_stress",
    "wall_normal_velocity",
    "no_slip",
    "contact_angle",
)


def _mx(*arrs):
    return max((float(np.max(np.abs(a))) if np.size(a) else 0.0) for a in arrs)


def check_compatibility(u0: State, h0, params: FluidParams, grid: GridSpec, tol: float = 1e-8) -> CompatibilityReport:
    """Time-zero compatibility of ``(u0, h0)`` with the transformed problem.

    Checks, on the discrete traces, ``div u0 = G_d(h0, u0)``, the tangential
    stress balance against ``G_S`` tangential part, continuity of ``u0``
    across the interface, zero wall tangential stress, zero wall normal
    velocity, no-slip on top and bottom, and level contact points.
    """
    h0 = getattr(h0, "values", h0)
    h0 = np.asarray(h0, dtype=float)
    st = u0.copy()
    st["h"] = h0
    chi = make_bump(grid.domain)
    coeffs = hanzawa_coeffs(h0, chi, grid)
    op = assemble_operator(grid, params, couple_stokes=False, include_ms=False)
    Kz = op.K @ np.concatenate([st.z[: op.layout.n_velocity], np.zeros(op.layout.size - op.layout.n_velocity)])
    dx = grid.dx
    vel = _mx(st.velocity_vector())
    scale = max(1.0, vel)
    res, tols = {}, {}

    # divergence: div u - G_d is the Piola flux divergence
    div_lo, div_hi = [], []
    gd = g_d(st, coeffs)
    for s, acc in ((LO, div_lo), (HI, div_hi)):
        dy = grid.dy(s)
        u1, u2 = st.slab("u1", s), st.slab("u2", s)
        d = (u1[1:] - u1[:-1]) / dx + (u2[:, 1:] - u2[:, :-1]) / dy
        acc.append(d - gd[s])
    res["divergence"] = _mx(div_lo[0], div_hi[0])
    tols["divergence"] = tol * scale / min(dx, grid.dy_lo, grid.dy_hi)

    # pressure is not initial data: unless the state carries one, use the
    # jump implied by the normal stress balance
    if _mx(st["p_lo"], st["p_hi"], st["jp"]) == 0.0:
        _, perp = g_stress(st, params)
        n_rows = op.layout.index("u2_hi")[:, 0]
        jp = perp + params.sigma * (second_difference(grid.nx, dx) @ h0) - Kz[n_rows]
        st["p_hi"] = np.repeat(jp[:, None], grid.ny_hi, axis=1)
        st["jp"] = jp
    par, _ = g_stress(st, params)
    t_rows = op.layout.index("t1_hi")[1:-1, 0]
    res["tangential_stress"] = _mx(Kz[t_rows] - par[1:-1])
    tols["tangential_stress"] = tol * scale * max(params.mu_plus, params.mu_minus) / min(grid.dy_lo, grid.dy_hi)

    res["velocity_jump"] = _mx(st["t1_hi"][1:-1, 0] - st["t1_lo"][1:-1, 1], st["u2_hi"][:, 0] - st["u2_lo"][:, -1])
    tols["velocity_jump"] = tol * scale

    wall = [Kz[op.layout.index("s2_lo")[:, 1:]], Kz[op.layout.index("s2_hi")[:, :-1]]]
    res["wall_stress"] = _mx(*wall)
    tols["wall_stress"] = tol * scale * max(params.mu_plus, params.mu_minus) / dx

    res["wall_normal_velocity"] = _mx(
        st["u1_lo"][[0, -1]], st["u1_hi"][[0, -1]], st["t1_lo"][[0, -1], 1], st["t1_hi"][[0, -1], 0]
    )
    tols["wall_normal_velocity"] = tol * scale

    res["no_slip"] = _mx(
        st["u2_lo"][:, 0], st["u2_hi"][:, -1], st["t1_lo"][:, 0], st["t1_hi"][:, 1], st["s2_lo"][:, 0], st["s2_hi"][:, -1]
    )
    tols["no_slip"] = tol * scale

    # one-sided second-order end slopes from the cell-centre samples
    sl = (-2.0 * h0[0] + 3.0 * h0[1] - h0[2]) / dx
    sr = (2.0 * h0[-1] - 3.0 * h0[-2] + h0[-3]) / dx
    res["contact_angle"] = max(abs(sl), abs(sr))
    d4l = abs(h0[0] - 4 * h0[1] + 6 * h0[2] - 4 * h0[3] + h0[4])
    d4r = abs(h0[-1] - 4 * h0[-2] + 6 * h0[-3] - 4 * h0[-4] + h0[-5])
    hs = max(1.0, _mx(h0))
    tols["contact_angle"] = 2.0 * max(d4l, d4r) / dx + tol * hs
    return CompatibilityReport(res, tols)


# -- driver -------------------------------------------------------------------


@dataclass
class SimulationResult:
    series: DiagnosticsSeries
    final: State
    snapshots: list
    iterations: list
    wall_time: float


def simulate(cfg: SimConfig, u0: State | None = None, h0=None, smallness: float | None = None) -> SimulationResult:
    """Advance the nonlinear problem from ``t = 0`` to ``cfg.t_end``.

    Records diagnostics at every step and snapshots every
    ``cfg.save_every`` steps (0 disables).  A warning is logged if the
    initial height exceeds ``smallness`` (default ``d0 / 2``).  Step errors
    are re-raised with the failing time attached.
    """
    grid, params = cfg.grid, cfg.params
    state = u0.copy() if u0 is not None else State(grid)
    if h0 is not None:
        state["h"] = getattr(h0, "values", h0)
    state.t = 0.0
    state.d0 = cfg.d0
    rep = check_compatibility(state, state.h, params, grid)
    if not rep.passed:
        raise IncompatibleData("initial data are not compatible: " + ", ".join(rep.failed))
    bound = cfg.d0 / 2.0 if smallness is None else smallness
    if np.max(np.abs(state.h)) > bound:
        log.warning("initial max|h| = %.3g exceeds the smallness advisory %.3g", np.max(np.abs(state.h)), bound)
    chi = make_bump(grid.domain)
    series = DiagnosticsSeries()
    series.append(record(state, params, hanzawa_coeffs(state.h, chi, grid), cfg.dissipation_factor))
    snaps = [state.to_dict()] if cfg.save_every else []
    iters = []
    dh = None
    t0 = time.perf_counter()
    for n in range(cfg.n_steps):
        try:
            new = nonlinear_step(state, cfg, dh_dt=dh, chi=chi)
        except MsnsError as exc:
            raise type(exc)(f"step {n + 1} (t = {state.t + cfg.dt:.6g}): {exc}") from exc
        dh = new.meta["dh_dt"]
        iters.append(new.meta["iterations"])
        state = new
        series.append(record(state, params, hanzawa_coeffs(state.h, chi, grid), cfg.dissipation_factor))
        if cfg.save_every and (n + 1) % cfg.save_every == 0:
            snaps.append(state.to_dict())
    return SimulationResult(series, state, snaps, iters, time.perf_counter() - t0)
