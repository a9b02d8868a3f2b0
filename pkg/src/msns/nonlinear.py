"""Geometric quantities and the transformed-frame nonlinearities.

All defects are written so that they vanish identically at ``h = 0`` and are
quadratic in the size of the state.  Two evaluation forms are offered for the
bulk divergence and Laplace defects:

* ``"literal"``  the pointwise operator difference, e.g. ``(div - div_h) u``
* ``"piola"``    the conservative form ``div u - div(J DTheta^{-1} u)``,
  which the time stepper uses because its discrete flux form keeps the mean
  of ``h`` fixed at every fixed-point iterate.

Both vanish at the solution of the same nonlinear problem.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import HI, LO, GridSpec, HanzawaCoeffs, height_derivatives
from .state import FluidParams, State

__all__ = [
    "curvature",
    "interface_kinematics",
    "g_kappa",
    "g_d",
    "g_stress",
    "g_sigma",
    "g_bulk_eta",
    "conv_terms",
    "g_wall",
    "interface_potential",
    "NonlinearRHS",
    "nonlinear_rhs",
]


def _hvals(h):
    return getattr(h, "values", np.asarray(h, dtype=float))


# -- interface geometry ------------------------------------------------------


def curvature(h, dx: float, slopes=(0.0, 0.0)) -> np.ndarray:
    """``K(h) = h'' / (1 + h'^2)^{3/2}`` at the cell-centre abscissae."""
    d = height_derivatives(_hvals(h), dx, slopes)
    return d.hpp_c / (1.0 + d.hp_c**2) ** 1.5


def interface_kinematics(h, dh_dt, dx: float, slopes=(0.0, 0.0)):
    """Unit normal ``(-h', 1)/sqrt(1+h'^2)`` and normal velocity ``h_t/sqrt(1+h'^2)``.

    Returns
    -------
    nu : ndarray, shape (nx, 2)
    V : ndarray, shape (nx,)
    """
    d = height_derivatives(_hvals(h), dx, slopes)
    root = np.sqrt(1.0 + d.hp_c**2)
    nu = np.stack([-d.hp_c / root, 1.0 / root], axis=-1)
    return nu, np.asarray(dh_dt, dtype=float) / root


def _kappa_defect(hp, hpp):
    # K - h'' = (1/r - 1) h'' + h' d/dx(1/r),  r = sqrt(1 + h'^2),
    # with 1/r - 1 = -h'^2 / (r (1 + r)) and d/dx(1/r) = -h' h'' / r^3
    q = hp * hp
    r = np.sqrt(1.0 + q)
    return -q * hpp / (r * (1.0 + r)) - q * hpp / r**3


def g_kappa(h, params: FluidParams, dx: float, slopes=(0.0, 0.0)) -> np.ndarray:
    """``sigma (K(h) - h'')`` in a cancellation-free expanded form."""
    d = height_derivatives(_hvals(h), dx, slopes)
    return params.sigma * _kappa_defect(d.hp_c, d.hpp_c)


# -- staggered derivative helpers --------------------------------------------


def _ghost(trace, first, second):
    """Quadratic ghost value half a cell outside ``first``, through the trace."""
    return (8.0 * trace - 6.0 * first + second) / 3.0


def _u1_yext(u1, t1):
    """u1 padded with one ghost row below and above, shape (nx+1, ny+2)."""
    lo = _ghost(t1[:, 0], u1[:, 0], u1[:, 1])
    hi = _ghost(t1[:, 1], u1[:, -1], u1[:, -2])
    return np.concatenate([lo[:, None], u1, hi[:, None]], axis=1)


def _u2_xext(u2, s2):
    """u2 padded with one ghost column left and right, shape (nx+2, ny+1)."""
    left = _ghost(s2[0], u2[0], u2[1])
    right = _ghost(s2[1], u2[-1], u2[-2])
    return np.concatenate([left[None, :], u2, right[None, :]], axis=0)


def _d1(e, dh, axis):
    """Central first difference of a padded array, dropping the pads."""
    sl_p = [slice(None)] * e.ndim
    sl_m = [slice(None)] * e.ndim
    sl_p[axis] = slice(2, None)
    sl_m[axis] = slice(None, -2)
    return (e[tuple(sl_p)] - e[tuple(sl_m)]) / (2.0 * dh)


def _d2(e, dh, axis):
    sl_p = [slice(None)] * e.ndim
    sl_0 = [slice(None)] * e.ndim
    sl_m = [slice(None)] * e.ndim
    sl_p[axis] = slice(2, None)
    sl_0[axis] = slice(1, -1)
    sl_m[axis] = slice(None, -2)
    return (e[tuple(sl_p)] - 2.0 * e[tuple(sl_0)] + e[tuple(sl_m)]) / dh**2


def _avg4_u2_to_u1(u2):
    """u2 (nx, ny+1) to interior u1 faces (nx-1, ny)."""
    c = 0.5 * (u2[:, 1:] + u2[:, :-1])
    return 0.5 * (c[1:] + c[:-1])


def _avg4_u1_to_u2(u1):
    """u1 (nx+1, ny) to interior u2 faces (nx, ny-1)."""
    c = 0.5 * (u1[1:] + u1[:-1])
    return 0.5 * (c[:, 1:] + c[:, :-1])


def _slab_fields(state: State, s: int):
    u1 = state.slab("u1", s)
    u2 = state.slab("u2", s)
    t1 = state.slab("t1", s)
    s2 = state.slab("s2", s)
    return u1, u2, t1, s2


def _sigma_trace(t1, s):
    """u1 at the interface, averaged from faces to cell centres."""
    row = t1[:, 1] if s == LO else t1[:, 0]
    return 0.5 * (row[1:] + row[:-1])


def _sigma_row_u2(u2, s):
    return u2[:, -1] if s == LO else u2[:, 0]


# -- divergence defect ----------------------------------------------------------


def _piola_fluxes(state: State, coeffs: HanzawaCoeffs, s: int):
    """``F = J DTheta^{-1} u`` on the faces of slab ``s``."""
    u1, u2, t1, _ = _slab_fields(state, s)
    c1 = coeffs["u1", s]
    c2 = coeffs["u2", s]
    F1 = c1.J * u1
    ubar = np.zeros_like(u2)
    cc = 0.5 * (u1[1:] + u1[:-1])
    ubar[:, 1:-1] = 0.5 * (cc[:, 1:] + cc[:, :-1])
    ubar[:, -1 if s == LO else 0] = _sigma_trace(t1, s)
    # J a = h' chi vanishes on the outer row where chi = 0
    F2 = u2 - c2.J * c2.a * ubar
    return F1, F2


def _fv_div(F1, F2, dx, dy):
    return (F1[1:] - F1[:-1]) / dx + (F2[:, 1:] - F2[:, :-1]) / dy


def g_d(state: State, coeffs: HanzawaCoeffs, form: str = "piola"):
    """Divergence defect per cell, one array per slab.

    ``form="literal"`` evaluates ``Tr((I - DTheta^{-T}) grad u)`` pointwise at
    cell centres, ``form="piola"`` the conservative ``div u - div(J DTheta^{-1} u)``
    with fluxes on faces.
    """
    grid = state.grid
    out = []
    for s in (LO, HI):
        dx, dy = grid.dx, grid.dy(s)
        u1, u2, t1, _ = _slab_fields(state, s)
        if form == "piola":
            F1, F2 = _piola_fluxes(state, coeffs, s)
            out.append(_fv_div(u1, u2, dx, dy) - _fv_div(F1, F2, dx, dy))
        elif form == "literal":
            c = coeffs["cell", s]
            u1y_f = _d1(_u1_yext(u1, t1), dy, 1)
            u1y = 0.5 * (u1y_f[1:] + u1y_f[:-1])
            u2y = (u2[:, 1:] - u2[:, :-1]) / dy
            # (div - div_h) u = a u1_y + (1 - b) u2_y
            out.append(c.a * u1y + (1.0 - c.b) * u2y)
        else:
            raise ValueError(f"unknown form {form!r}")
    return tuple(out)


# -- potential ----------------------------------------------------------------


def interface_potential(h, params: FluidParams, dx: float, slopes=(0.0, 0.0)) -> np.ndarray:
    """``sigma K(h)`` as ``sigma h'' + G_kappa`` on the interface."""
    d = height_derivatives(_hvals(h), dx, slopes)
    return params.sigma * d.hpp_c + params.sigma * _kappa_defect(d.hp_c, d.hpp_c)


def _eta_sigma_dy(eta, eta_sig, dy, s):
    """Half-cell one-sided ``d eta / dy`` on the interface."""
    if s == LO:
        return 2.0 * (eta_sig - eta[:, -1]) / dy
    return 2.0 * (eta[:, 0] - eta_sig) / dy


def _mirror_dx(v, dx):
    g = np.concatenate(([v[0]], v, [v[-1]]))
    return (g[2:] - g[:-2]) / (2.0 * dx)


def g_bulk_eta(state: State, coeffs: HanzawaCoeffs, eta_sigma=None, form: str = "piola", params=None):
    """Laplace defect ``g_c`` per slab and exterior Neumann defect ``g_n``.

    ``eta_sigma`` is the interface value used by the half-cell interface
    stencil; by default ``sigma K(h)`` at the current height.
    """
    grid = state.grid
    nx, dx = grid.nx, grid.dx
    if eta_sigma is None:
        params = params or FluidParams()
        eta_sigma = interface_potential(state.h, params, dx)
    eta_sigma = np.asarray(eta_sigma, dtype=float)
    esx = _mirror_dx(eta_sigma, dx)
    gc = []
    gn = {}
    for s in (LO, HI):
        dy = grid.dy(s)
        eta = state.slab("eta", s)
        ny = eta.shape[1]
        if form == "piola":
            cu1, cu2 = coeffs["u1", s], coeffs["u2", s]
            ex = np.gradient(eta, dx, axis=0, edge_order=2)
            ey = np.gradient(eta, dy, axis=1, edge_order=2)
            # vertical faces: ((J - 1) eta_x - J a eta_y), zero on the walls
            Fx = np.zeros((nx + 1, ny))
            ex_f = (eta[1:] - eta[:-1]) / dx
            ey_f = 0.5 * (ey[1:] + ey[:-1])
            J, a = cu1.J[1:-1], cu1.a[1:-1]
            Fx[1:-1] = (J - 1.0) * ex_f - J * a * ey_f
            # horizontal faces: -J a eta_x + (J (a^2 + b^2) - 1) eta_y
            Fy = np.zeros((nx, ny + 1))
            ex_h = 0.5 * (ex[:, 1:] + ex[:, :-1])
            ey_h = (eta[:, 1:] - eta[:, :-1]) / dy
            J, a, b = cu2.J[:, 1:-1], cu2.a[:, 1:-1], cu2.b[:, 1:-1]
            Fy[:, 1:-1] = -J * a * ex_h + (J * (a * a + b * b) - 1.0) * ey_h
            js = -1 if s == LO else 0
            J, a, b = cu2.J[:, js], cu2.a[:, js], cu2.b[:, js]
            eys = _eta_sigma_dy(eta, eta_sigma, dy, s)
            Fy[:, js] = -J * a * esx + (J * (a * a + b * b) - 1.0) * eys
            gc.append(-_fv_div(Fx, Fy, dx, dy))
        elif form == "literal":
            c = coeffs["cell", s]
            pad = _eta_ypad(eta, eta_sigma, s)
            # zero-flux mirror in x
            padx = np.concatenate([pad[:1], pad, pad[-1:]], axis=0)
            ey = _d1(padx, dy, 1)[1:-1]
            eyy = _d2(padx, dy, 1)[1:-1]
            exy = _d1(_d1(padx, dy, 1), dx, 0)
            # (Delta - Delta_h) eta
            gc.append(
                2.0 * c.a * exy
                - (c.a**2 + c.b**2 - 1.0) * eyy
                - (-c.ax + c.a * c.ay + c.b * c.by) * ey
            )
        else:
            raise ValueError(f"unknown form {form!r}")
        # nu . (grad - grad_h) eta = nu . (a eta_y, (1 - b) eta_y)
        ey = np.gradient(eta, dy, axis=1, edge_order=2)
        cu1 = coeffs["u1", s]
        tag = "lo" if s == LO else "hi"
        gn[f"left_{tag}"] = -cu1.a[0] * ey[0]
        gn[f"right_{tag}"] = cu1.a[-1] * ey[-1]
        cu2 = coeffs["u2", s]
        if s == LO:
            gn["bottom"] = -(1.0 - cu2.b[:, 0]) * ey[:, 0]
        else:
            gn["top"] = (1.0 - cu2.b[:, -1]) * ey[:, -1]
    return tuple(gc), gn


def _eta_ypad(eta, eta_sig, s):
    """Pad eta in y: interface side by a quadratic ghost through eta_sigma, outer side mirrored."""
    if s == LO:
        top = _ghost(eta_sig, eta[:, -1], eta[:, -2])
        return np.concatenate([eta[:, :1], eta, top[:, None]], axis=1)
    bot = _ghost(eta_sig, eta[:, 0], eta[:, 1])
    return np.concatenate([bot[:, None], eta, eta[:, -1:]], axis=1)


# -- interface stress and kinematics -------------------------------------------


def _pressure_at_sigma(p, s):
    if s == LO:
        return 1.5 * p[:, -1] - 0.5 * p[:, -2]
    return 1.5 * p[:, 0] - 0.5 * p[:, 1]


def _interface_gradients(state: State, s: int):
    """One-sided velocity derivatives on the interface row of slab ``s``.

    Keys ending in ``_f`` live on x-faces, ``_c`` at cell centres; all use
    values from slab ``s`` only.
    """
    grid = state.grid
    dx, dy = grid.dx, grid.dy(s)
    u1, u2, t1, _ = _slab_fields(state, s)
    if s == LO:
        tr = t1[:, 1]
        w1y_f = 2.0 * (tr - u1[:, -1]) / dy
        w2y_c = (3.0 * u2[:, -1] - 4.0 * u2[:, -2] + u2[:, -3]) / (2.0 * dy)
    else:
        tr = t1[:, 0]
        w1y_f = 2.0 * (u1[:, 0] - tr) / dy
        w2y_c = (-3.0 * u2[:, 0] + 4.0 * u2[:, 1] - u2[:, 2]) / (2.0 * dy)
    u2s = _sigma_row_u2(u2, s)
    w2x_f = np.zeros(grid.nx + 1)
    w2x_f[1:-1] = (u2s[1:] - u2s[:-1]) / dx
    w1x_f = np.gradient(tr, dx, edge_order=2)
    w2x_c = np.gradient(u2s, dx, edge_order=2)
    w1y_c = 0.5 * (w1y_f[1:] + w1y_f[:-1])
    w2y_f = np.zeros(grid.nx + 1)
    w2y_f[1:-1] = 0.5 * (w2y_c[1:] + w2y_c[:-1])
    return dict(w1x_f=w1x_f, w1y_f=w1y_f, w2x_f=w2x_f, w2y_f=w2y_f, w2x_c=w2x_c, w1y_c=w1y_c, w2y_c=w2y_c)


def g_stress(state: State, params: FluidParams, slopes=(0.0, 0.0)):
    """Tangential (x-faces) and normal (cell centres) interface stress defects.

    With ``n = (-h', 1)`` and ``T = mu (Dw + Dw^T) - p I`` the defect is
    ``[[T_h n - T e2]] + sigma (K n - h'' e2)``; on the interface ``J = 1``
    and ``a = h'``, so every term carries a factor ``h'`` or ``K - h''``.
    """
    grid = state.grid
    d = height_derivatives(state.h, grid.dx, slopes)
    hp_f = d.hp_f
    hp_c = d.hp_c
    K_c = d.hpp_c / (1.0 + hp_c**2) ** 1.5
    K_f = np.zeros(grid.nx + 1)
    K_f[1:-1] = 0.5 * (K_c[1:] + K_c[:-1])
    par = np.zeros(grid.nx + 1)
    perp = np.zeros(grid.nx)
    for s, sign in ((LO, -1.0), (HI, 1.0)):
        mu = params.mu(s)
        g = _interface_gradients(state, s)
        ps = _pressure_at_sigma(state.slab("p", s), s)
        ps_f = np.zeros(grid.nx + 1)
        ps_f[1:-1] = 0.5 * (ps[1:] + ps[:-1])
        t = mu * (2.0 * hp_f**2 * g["w1y_f"] - hp_f * g["w2y_f"] - 2.0 * hp_f * g["w1x_f"]) + hp_f * ps_f
        n = mu * (hp_c**2 * g["w2y_c"] - hp_c * (g["w1y_c"] + g["w2x_c"]))
        par += sign * t
        perp += sign * n
    par += params.sigma * (-hp_f * K_f)
    par[[0, -1]] = 0.0
    perp += params.sigma * _kappa_defect(hp_c, d.hpp_c)
    return par, perp


def g_sigma(state: State, eta_sigma, slopes=(0.0, 0.0)) -> np.ndarray:
    """Kinematic defect ``-h' <u1> - h'^2 [[d eta / dy]]`` on the interface.

    ``<u1>`` is the mean of the two one-sided traces; ``eta`` is continuous
    along the interface so the tangential-derivative jump vanishes.
    """
    grid = state.grid
    d = height_derivatives(state.h, grid.dx, slopes)
    ubar = 0.5 * (_sigma_trace(state["t1_lo"], LO) + _sigma_trace(state["t1_hi"], HI))
    jump = _eta_sigma_dy(state["eta_hi"], eta_sigma, grid.dy_hi, HI) - _eta_sigma_dy(
        state["eta_lo"], eta_sigma, grid.dy_lo, LO
    )
    return -d.hp_c * ubar - d.hp_c**2 * jump


# -- momentum forcing -----------------------------------------------------------


def _transformed_parts(state: State, coeffs: HanzawaCoeffs, params: FluidParams, dh_dt, s: int):
    grid = state.grid
    dx, dy = grid.dx, grid.dy(s)
    u1, u2, t1, s2 = _slab_fields(state, s)
    p = state.slab("p", s)
    eta = state.slab("eta", s)
    mu, rho = params.mu(s), params.rho(s)
    dh_dt = np.asarray(dh_dt, dtype=float)

    # --- u1 rows: interior vertical faces
    c = coeffs["u1", s]
    C = {k: getattr(c, k)[1:-1] for k in ("J", "a", "b", "ax", "ay", "by", "chi")}
    e = _u1_yext(u1, t1)
    w1y_all = _d1(e, dy, 1)
    w = u1[1:-1]
    wx = (u1[2:] - u1[:-2]) / (2.0 * dx)
    wy = w1y_all[1:-1]
    wyy = _d2(e, dy, 1)[1:-1]
    wxy = (w1y_all[2:] - w1y_all[:-2]) / (2.0 * dx)
    lap_defect = (
        -2.0 * C["a"] * wxy
        + (C["a"] ** 2 + C["b"] ** 2 - 1.0) * wyy
        + (-C["ax"] + C["a"] * C["ay"] + C["b"] * C["by"]) * wy
    )
    py_c = np.gradient(p, dy, axis=1, edge_order=2)
    py = 0.5 * (py_c[1:] + py_c[:-1])
    v = _avg4_u2_to_u1(u2)
    ht = 0.5 * (dh_dt[1:] + dh_dt[:-1])
    f1 = mu * lap_defect + C["a"] * py
    f1 += rho * C["chi"] * ht[:, None] / C["J"] * wy
    f1 -= rho * (w * (wx - C["a"] * wy) + v * C["b"] * wy)
    if params.rho_plus != params.rho_minus:
        ex_c = np.gradient(eta, dx, axis=0, edge_order=2)
        ey_c = np.gradient(eta, dy, axis=1, edge_order=2)
        ex = 0.5 * (ex_c[1:] + ex_c[:-1])
        ey = 0.5 * (ey_c[1:] + ey_c[:-1])
        f1 -= params.density_jump * ((ex - C["a"] * ey) * (wx - C["a"] * wy) + C["b"] ** 2 * ey * wy)

    # --- u2 rows: interior horizontal faces
    c = coeffs["u2", s]
    C = {k: getattr(c, k)[:, 1:-1] for k in ("J", "a", "b", "ax", "ay", "by", "chi")}
    e2 = _u2_xext(u2, s2)
    w2x_all = _d1(e2, dx, 0)
    w = u2[:, 1:-1]
    wy = (u2[:, 2:] - u2[:, :-2]) / (2.0 * dy)
    wyy = (u2[:, 2:] - 2.0 * u2[:, 1:-1] + u2[:, :-2]) / dy**2
    wx = w2x_all[:, 1:-1]
    wxy = (w2x_all[:, 2:] - w2x_all[:, :-2]) / (2.0 * dy)
    lap_defect = (
        -2.0 * C["a"] * wxy
        + (C["a"] ** 2 + C["b"] ** 2 - 1.0) * wyy
        + (-C["ax"] + C["a"] * C["ay"] + C["b"] * C["by"]) * wy
    )
    py = (p[:, 1:] - p[:, :-1]) / dy
    v = _avg4_u1_to_u2(u1)
    f2 = mu * lap_defect + (1.0 - C["b"]) * py
    f2 += rho * C["chi"] * dh_dt[:, None] / C["J"] * wy
    f2 -= rho * (v * (wx - C["a"] * wy) + w * C["b"] * wy)
    if params.rho_plus != params.rho_minus:
        ex_c = np.gradient(eta, dx, axis=0, edge_order=2)
        ex = 0.5 * (ex_c[:, 1:] + ex_c[:, :-1])
        ey = (eta[:, 1:] - eta[:, :-1]) / dy
        f2 -= params.density_jump * ((ex - C["a"] * ey) * (wx - C["a"] * wy) + C["b"] ** 2 * ey * wy)
    return f1, f2


def conv_terms(state: State, coeffs: HanzawaCoeffs, params: FluidParams, dh_dt, gd=None):
    """Momentum forcing on interior velocity faces.

    Sum of ``mu (Delta_h - Delta) w + (grad - grad_h) p``, the frame-motion
    term ``rho chi h_t / J  d_y w``, the transport ``-rho (w . grad_h) w``,
    the density-contrast term (only if ``rho+ != rho-``) and
    ``-mu grad G_d``, which converts the Laplacian form into the
    stress-divergence form used by the viscous operator.  ``gd`` is the
    per-slab divergence defect; it is recomputed when omitted.

    Returns a dict keyed like the velocity blocks, zero on non-momentum rows.
    """
    grid = state.grid
    if gd is None:
        gd = g_d(state, coeffs)
    out = {}
    for s, tag in ((LO, "lo"), (HI, "hi")):
        f1, f2 = _transformed_parts(state, coeffs, params, dh_dt, s)
        mu = params.mu(s)
        gx = (gd[s][1:] - gd[s][:-1]) / grid.dx
        gy = (gd[s][:, 1:] - gd[s][:, :-1]) / grid.dy(s)
        F1 = np.zeros(state.layout.shapes[f"u1_{tag}"])
        F2 = np.zeros(state.layout.shapes[f"u2_{tag}"])
        F1[1:-1] = f1 - mu * gx
        F2[:, 1:-1] = f2 - mu * gy
        out[f"u1_{tag}"] = F1
        out[f"u2_{tag}"] = F2
    return out


def g_wall(state: State, coeffs: HanzawaCoeffs, params: FluidParams):
    """Wall tangential-stress defect at the wall cell heights, per slab.

    Evaluates ``mu (nu_1 a d_y u2 + (1 - b) d_y (u . nu))`` on ``x = 0``
    (``nu_1 = -1``) and ``x = W`` (``nu_1 = 1``).  It vanishes for states with
    ``u . nu = 0`` on the walls and a level interface at the contact points;
    the time stepper replaces it by zero.
    """
    grid = state.grid
    out = []
    for s in (LO, HI):
        dy = grid.dy(s)
        u1, _, _, s2 = _slab_fields(state, s)
        c = coeffs["u1", s]
        g = np.zeros((2, grid.ny(s)))
        for w, col, nu1 in ((0, 0, -1.0), (1, -1, 1.0)):
            u2y = (s2[w, 1:] - s2[w, :-1]) / dy
            un_y = np.gradient(nu1 * u1[col], dy, edge_order=2)
            g[w] = params.mu(s) * (nu1 * c.a[col] * u2y + (1.0 - c.b[col]) * un_y)
        out.append(g)
    return tuple(out)


# -- bundle -------------------------------------------------------------------


@dataclass
class NonlinearRHS:
    """All nonlinear right-hand sides of the transformed problem at one state."""

    f_u: dict
    g_d: tuple
    g_s_par: np.ndarray
    g_s_perp: np.ndarray
    g_sigma: np.ndarray
    g_c: tuple
    g_kappa: np.ndarray
    g_n: dict
    g_p: tuple

    def components(self) -> dict[str, np.ndarray]:
        """Flattened arrays per named component."""
        cat = lambda xs: np.concatenate([np.ravel(x) for x in xs])
        return {
            "f_u": cat(self.f_u.values()),
            "g_d": cat(self.g_d),
            "g_s_par": self.g_s_par,
            "g_s_perp": self.g_s_perp,
            "g_sigma": self.g_sigma,
            "g_c": cat(self.g_c),
            "g_kappa": self.g_kappa,
            "g_n": cat(self.g_n.values()),
            "g_p": cat(self.g_p),
        }

    def norms(self) -> dict[str, float]:
        return {k: float(np.max(np.abs(v))) if v.size else 0.0 for k, v in self.components().items()}

    def max_abs(self) -> float:
        return max(self.norms().values())


def nonlinear_rhs(
    state: State,
    coeffs: HanzawaCoeffs,
    params: FluidParams,
    dh_dt,
    slopes=(0.0, 0.0),
    form: str = "piola",
) -> NonlinearRHS:
    """Evaluate every nonlinearity at ``state``.

    The interface potential entering the defects is ``sigma K(h)``; ``dh_dt``
    is the lagged height velocity used by the frame-motion term.
    """
    grid = state.grid
    eta_sig = interface_potential(state.h, params, grid.dx, slopes)
    gd = g_d(state, coeffs, form=form)
    gc, gn = g_bulk_eta(state, coeffs, eta_sig, form=form)
    par, perp = g_stress(state, params, slopes)
    return NonlinearRHS(
        f_u=conv_terms(state, coeffs, params, dh_dt, gd),
        g_d=gd,
        g_s_par=par,
        g_s_perp=perp,
        g_sigma=g_sigma(state, eta_sig, slopes),
        g_c=gc,
        g_kappa=g_kappa(state.h, params, grid.dx, slopes),
        g_n=gn,
        g_p=g_wall(state, coeffs, params),
    )
