"""Energy, dissipation, masses, decay fits and exponent arithmetic."""
from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from .errors import DegenerateWindow
from .geometry import HI, LO, HanzawaCoeffs, height_derivatives
from .operators import _node_weights, strain_operators
from .state import FluidParams, State

__all__ = [
    "DiagnosticsRecord",
    "DiagnosticsSeries",
    "ExponentTriple",
    "energy",
    "dissipation",
    "masses",
    "decay_fit",
    "admissible_exponents",
    "record",
]


def _face_weights(n, h):
    w = np.full(n, h)
    w[[0, -1]] = 0.5 * h
    return w


def energy(state: State, params: FluidParams, coeffs: HanzawaCoeffs | None = None):
    """Return ``(E, interface_length, kinetic)``.

    The interface length is the trapezoid sum of ``sqrt(1 + h'^2)`` over the
    x-faces; the kinetic energy ``1/2 sum rho |u|^2 J dV`` uses face control
    volumes, halved on boundary and interface rows.
    """
    grid = state.grid
    d = height_derivatives(state.h, grid.dx)
    length = float(np.sum(_face_weights(grid.nx + 1, grid.dx) * np.sqrt(1.0 + d.hp_f**2)))
    kin = 0.0
    for s in (LO, HI):
        rho = params.rho(s)
        dx, dy = grid.dx, grid.dy(s)
        u1, u2 = state.slab("u1", s), state.slab("u2", s)
        J1 = 1.0 if coeffs is None else coeffs["u1", s].J
        J2 = 1.0 if coeffs is None else coeffs["u2", s].J
        w1 = np.outer(_face_weights(grid.nx + 1, dx), np.full(grid.ny(s), dy))
        w2 = np.outer(np.full(grid.nx, dx), _face_weights(grid.ny(s) + 1, dy))
        kin += 0.5 * rho * float(np.sum(w1 * J1 * u1**2) + np.sum(w2 * J2 * u2**2))
    return params.sigma * length + kin, length, kin


def dissipation(
    state: State,
    params: FluidParams,
    coeffs: HanzawaCoeffs | None = None,
    dissipation_factor: float = 1.0,
    eta_sigma=None,
) -> float:
    """``factor * sum mu |Du|^2 J dV + sum |grad_h eta|^2 J dV``.

    ``Du`` is the symmetric gradient on the MAC grid (normal strains at cell
    centres, shear at nodes).  ``dissipation_factor=1`` reproduces the
    formula as commonly written for this model; the classical Stokes identity
    carries a factor 2.
    """
    grid = state.grid
    lay = state.layout
    U = state.velocity_vector()
    visc = 0.0
    for s in (LO, HI):
        mu = params.mu(s)
        vol = grid.cell_volume(s)
        e11, e22, uy, vx = strain_operators(lay, s)
        Jc = 1.0 if coeffs is None else coeffs["cell", s].J.ravel()
        Jn = 1.0 if coeffs is None else coeffs["node", s].J.ravel()
        a, b = e11 @ U, e22 @ U
        e12 = 0.5 * (uy @ U + vx @ U)
        visc += mu * float(np.sum(vol * Jc * (a * a + b * b)) + np.sum(2.0 * _node_weights(grid, s).ravel() * Jn * e12**2))
    pot = 0.0
    if eta_sigma is None:
        from .nonlinear import interface_potential

        eta_sigma = interface_potential(state.h, params, grid.dx)
    for s in (LO, HI):
        dx, dy = grid.dx, grid.dy(s)
        eta = state.slab("eta", s)
        cu1 = None if coeffs is None else coeffs["u1", s]
        cu2 = None if coeffs is None else coeffs["u2", s]
        ex = (eta[1:] - eta[:-1]) / dx
        ey = (eta[:, 1:] - eta[:, :-1]) / dy
        if s == LO:
            eys = 2.0 * (eta_sigma - eta[:, -1]) / dy
        else:
            eys = 2.0 * (eta[:, 0] - eta_sigma) / dy
        if coeffs is None:
            wx = wy = ws = 1.0
        else:
            # diagonal Piola weights J and J (a^2 + b^2)
            wx = cu1.J[1:-1]
            wy_full = cu2.J * (cu2.a**2 + cu2.b**2)
            wy = wy_full[:, 1:-1]
            ws = wy_full[:, -1 if s == LO else 0]
        pot += float(np.sum(wx * ex**2) * dx * dy + np.sum(wy * ey**2) * dx * dy + np.sum(ws * eys**2) * dx * dy / 2.0)
    return dissipation_factor * visc + pot


def masses(state: State):
    """``(mean_h, |Omega-|, |Omega+|)``."""
    grid = state.grid
    h = state.h
    dx = grid.dx
    W = grid.domain.width
    return float(np.sum(h) * dx / W), float(np.sum(h - grid.domain.L1) * dx), float(np.sum(grid.domain.L2 - h) * dx)


@dataclass
class DiagnosticsRecord:
    t: float
    E: float
    D: float
    mean_h: float
    mass_lo: float
    mass_hi: float
    max_h: float
    kinetic: float
    iface_len: float


COLUMNS = tuple(f.name for f in fields(DiagnosticsRecord))


@dataclass
class DiagnosticsSeries:
    records: list = field(default_factory=list)

    def append(self, rec: DiagnosticsRecord):
        self.records.append(rec)

    def __len__(self):
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    @classmethod
    def from_arrays(cls, **cols) -> "DiagnosticsSeries":
        n = len(next(iter(cols.values())))
        full = {c: np.zeros(n) for c in COLUMNS}
        full.update({k: np.asarray(v, dtype=float) for k, v in cols.items()})
        return cls([DiagnosticsRecord(*(float(full[c][i]) for c in COLUMNS)) for i in range(n)])


def record(state: State, params: FluidParams, coeffs=None, dissipation_factor: float = 1.0) -> DiagnosticsRecord:
    E, length, kin = energy(state, params, coeffs)
    D = dissipation(state, params, coeffs, dissipation_factor)
    mean_h, m_lo, m_hi = masses(state)
    return DiagnosticsRecord(
        t=state.t, E=E, D=D, mean_h=mean_h, mass_lo=m_lo, mass_hi=m_hi,
        max_h=float(np.max(np.abs(state.h))), kinetic=kin, iface_len=length,
    )


def decay_fit(series, window=None, quantity=None, mean0: float | None = None):
    """Least-squares fit of ``log |signal|`` against ``t`` over ``window``.

    By default the signal is ``max|h - mean_h(0)|``; supply ``quantity`` (an
    array aligned with the records) to fit something else, e.g. the energy
    excess.  ``window`` is ``(t_start, t_end)``.  Returns
    ``(rate, amplitude, residual)`` with ``signal ~ amplitude * exp(-rate t)``
    and ``residual`` the RMS deviation in log space.
    """
    t = series.column("t") if isinstance(series, DiagnosticsSeries) else np.asarray(series[0], float)
    if quantity is None:
        if not isinstance(series, DiagnosticsSeries):
            y = np.asarray(series[1], dtype=float)
        else:
            y = series.column("max_h")
    else:
        y = np.asarray(quantity, dtype=float)
    if window is not None:
        mask = (t >= window[0]) & (t <= window[1])
        t, y = t[mask], y[mask]
    if t.size < 10:
        raise DegenerateWindow(f"need at least 10 records in the window, got {t.size}")
    y = np.abs(y)
    if np.any(y <= 1e-14):
        raise DegenerateWindow("signal below 1e-14 inside the window")
    A = np.vstack([t, np.ones_like(t)]).T
    coef, *_ = np.linalg.lstsq(A, np.log(y), rcond=None)
    resid = np.log(y) - A @ coef
    rate = -coef[0]
    return float(rate + 0.0), float(np.exp(coef[1])), float(np.sqrt(np.mean(resid**2)))


@dataclass(frozen=True)
class ExponentTriple:
    p: float
    q: float
    r_lower: float
    r_upper: float
    admissible: bool
    pq_admissible: bool
    bounds: tuple

    @property
    def interval(self) -> tuple[float, float]:
        return (self.r_lower, self.r_upper)

    @property
    def empty(self) -> bool:
        """True when ``(r_lower, r_upper]`` contains no point (up to round-off)."""
        return not self.r_upper > self.r_lower * (1.0 + 1e-12)


def admissible_exponents(p: float, q: float) -> ExponentTriple:
    """Range of ``r`` compatible with ``(p, q)``.

    ``r_upper = min(7/(6/q - 1), 3q/(3 - q), 7/2)`` and the interval is
    ``(3, r_upper]``.  ``(p, q)`` itself must satisfy ``p > 6`` and
    ``q in (9/5, 2) & (2p/(p+1), 2)``.
    """
    p = float(p)
    q = float(q)
    # 7/(6/q - 1) written as 7q/(6 - q): one rounding fewer, exact at q = 9/5
    b1 = 7.0 * q / (6.0 - q) if q < 6.0 else np.inf
    b2 = 3.0 * q / (3.0 - q) if q < 3.0 else np.inf
    r_upper = min(b1, b2, 3.5)
    pq_ok = p > 6.0 and 9.0 / 5.0 < q < 2.0 and 2.0 * p / (p + 1.0) < q
    nonempty = r_upper > 3.0 * (1.0 + 1e-12)
    return ExponentTriple(p, q, 3.0, r_upper, bool(pq_ok and nonempty), bool(pq_ok), (b1, b2, 3.5))
