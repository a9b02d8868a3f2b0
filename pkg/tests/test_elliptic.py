import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from msns.elliptic import (
    TransmissionRHS,
    apply_T1,
    apply_T2,
    solve_potential,
    solve_transmission,
    zero_vector_field,
)
from msns.errors import IncompatibleData, ValidationError
from msns.geometry import HI, LO, DomainSpec, GridSpec
from msns.spectral import ms_dispersion
from msns.state import FluidParams


def grid(n):
    return GridSpec(DomainSpec(), n, n // 2, n // 2)


def test_potential_zero_data(grid16):
    sol = solve_potential(None, np.zeros(grid16.nx), grid=grid16)
    assert np.all(sol.eta_lo == 0) and np.all(sol.eta_hi == 0) and np.all(sol.jump == 0)


def test_potential_constant_data(grid16):
    sol = solve_potential(None, np.full(grid16.nx, 0.4), grid=grid16)
    assert np.allclose(sol.eta_lo, 0.4, atol=1e-13) and np.allclose(sol.eta_hi, 0.4, atol=1e-13)
    assert np.max(np.abs(sol.jump)) < 1e-12


def test_potential_separation_of_variables_oracle(params):
    # eta = c cos(kx) cosh(k(y - L))/cosh(kL) per strip; jump = sigma k^3 h (tanh kL2 + tanh k|L1|)
    errs = []
    for n in (32, 64, 128):
        g = grid(n)
        k = np.pi / g.domain.width
        mode = np.cos(k * g.x_centers)
        sol = solve_potential(None, -params.sigma * k**2 * mode, grid=g)
        exact = ms_dispersion(k, params, g.domain) * mode
        errs.append(np.max(np.abs(sol.jump - exact)) / np.max(np.abs(exact)))
    assert errs[-1] < 1e-3
    assert np.all(np.log2(np.array(errs[:-1]) / np.array(errs[1:])) > 1.8)


def test_potential_rejects_bad_data(grid16):
    with pytest.raises(ValidationError):
        solve_potential(None, np.zeros(3), grid=grid16)
    with pytest.raises(ValidationError):
        solve_potential(None, np.full(grid16.nx, np.nan), grid=grid16)


def test_transmission_zero(grid16, params):
    sol = solve_transmission(TransmissionRHS(), params, grid16)
    assert np.max(np.abs(sol.p_lo)) < 1e-14 and np.max(np.abs(sol.p_hi)) < 1e-14


def test_transmission_constant_jump(grid16, params):
    J0 = 0.3
    sol = solve_transmission(TransmissionRHS(jump=np.full(grid16.nx, J0)), params, grid16)
    # equal slab areas: p+ = J0/2, p- = -J0/2
    assert np.allclose(sol.p_hi, J0 / 2, atol=1e-13) and np.allclose(sol.p_lo, -J0 / 2, atol=1e-13)
    for v in sol.grad.values():
        assert np.max(np.abs(v)) < 1e-12


def test_transmission_rejects_unbalanced_source(grid16, params):
    q = (np.ones((grid16.nx, grid16.ny_lo)), np.zeros((grid16.nx, grid16.ny_hi)))
    with pytest.raises(IncompatibleData):
        solve_transmission(TransmissionRHS(q=q), params, grid16)


def _gradient_field(g):
    # phi = cos(pi x / W) sin(3 pi y / 2) has zero normal derivative on every wall
    W = g.domain.width
    f = zero_vector_field(g)
    for s, tag in ((LO, "lo"), (HI, "hi")):
        xf, yc = g.x_faces, g.y_centers(s)
        xc, yf = g.x_centers, g.y_faces(s)
        f[f"u1_{tag}"] = -(np.pi / W) * np.sin(np.pi * xf[:, None] / W) * np.sin(1.5 * np.pi * yc[None, :])
        f[f"u2_{tag}"] = 1.5 * np.pi * np.cos(np.pi * xc[:, None] / W) * np.cos(1.5 * np.pi * yf[None, :])
        f[f"u1_{tag}"][[0, -1]] = 0.0
    f["u2_lo"][:, 0] = 0.0
    f["u2_hi"][:, -1] = 0.0
    return f


def test_T1_reproduces_gradients(params):
    errs = []
    for n in (16, 32, 64):
        g = grid(n)
        f = _gradient_field(g)
        proj = apply_T1(f, params, g)
        errs.append(max(np.max(np.abs(proj[k][1:-1] - f[k][1:-1])) for k in f))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert errs[-1] < 0.05 and np.all(orders > 1.8)


def test_T_zero(grid16, params):
    assert all(np.all(np.abs(v) < 1e-14) for v in apply_T1(zero_vector_field(grid16), params, grid16).values())
    assert all(np.all(np.abs(v) < 1e-14) for v in apply_T2(np.zeros(grid16.nx), params, grid16).values())


def test_T2_matches_transmission(grid16, params):
    k = np.pi / grid16.domain.width
    j = params.sigma * k**2 * 0.01 * np.cos(k * grid16.x_centers)
    a = apply_T2(j, params, grid16)
    b = solve_transmission(TransmissionRHS(jump=j), params, grid16).grad
    for key in a:
        assert np.max(np.abs(a[key] - b[key])) <= 1e-12


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_T1_linearity(seed, alpha, beta):
    g = GridSpec(DomainSpec(), 8, 4, 4)
    P = FluidParams(rho_plus=2.0, rho_minus=0.5)
    rng = np.random.default_rng(seed)
    f = {k: rng.standard_normal(v.shape) for k, v in zero_vector_field(g).items()}
    h = {k: rng.standard_normal(v.shape) for k, v in zero_vector_field(g).items()}
    lhs = apply_T1({k: alpha * f[k] + beta * h[k] for k in f}, P, g)
    Tf, Th = apply_T1(f, P, g), apply_T1(h, P, g)
    for k in lhs:
        ref = alpha * Tf[k] + beta * Th[k]
        assert np.max(np.abs(lhs[k] - ref)) <= 1e-12 * max(1.0, np.max(np.abs(ref)))
