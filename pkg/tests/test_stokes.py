import numpy as np
import pytest

from msns.assembly import zero_data_fields
from msns.errors import IncompatibleDivergence, ValidationError
from msns.geometry import HI, LO, DomainSpec, GridSpec
from msns.state import FluidParams
from msns.stokes import assemble_stokes, solve_stokes_step


@pytest.fixture
def g8():
    return GridSpec(DomainSpec(), 8, 4, 4)


def test_zero_data_zero_solution(g8, params):
    sol = solve_stokes_step(assemble_stokes(params, g8, 1e-2))
    assert np.max(np.abs(sol.state.z)) == 0.0


def test_momentum_row_stencil(g8, params):
    # stress-divergence form: 5-point u1 stencil, 4 cross u2 entries, 2 pressures
    sys_ = assemble_stokes(params, g8, 1e-2)
    nnz = np.diff(sys_.K.tocsr().indptr)[sys_.op.rows.momentum]
    assert nnz.max() <= 11


def test_dt_only_shifts_momentum_diagonal(g8):
    P = FluidParams(rho_plus=2.0, rho_minus=0.5)
    a = assemble_stokes(P, g8, 1e-2).matrix
    b = assemble_stokes(P, g8, 5e-3).matrix
    d = (b - a).tocoo()
    d.eliminate_zeros()
    assert np.all(d.row == d.col)
    sys_ = assemble_stokes(P, g8, 1e-2)
    rows = sys_.op.rows.momentum
    assert set(d.row) == set(rows)
    assert np.allclose(d.diagonal()[rows], sys_.mass[rows] / 1e-2)


def test_dense_cross_check(g8, params, rng):
    sys_ = assemble_stokes(FluidParams(mu_plus=2.0, mu_minus=0.5), g8, np.inf)
    h = 0.01 * np.cos(np.pi * g8.x_centers / 2)
    curv = params.sigma * (np.roll(h, -1) - 2 * h + np.roll(h, 1))
    curv[0] = params.sigma * (h[1] - h[0])
    curv[-1] = params.sigma * (h[-2] - h[-1])
    curv /= g8.dx**2
    sol = solve_stokes_step(sys_, curvature=curv)
    from msns.assembly import build_rhs

    b = build_rhs(sys_.op, None, curvature=curv)[: sys_.size]
    x = np.linalg.solve(sys_.matrix.toarray(), b)
    assert np.allclose(sol.state.z[: sys_.size], x, atol=1e-12 * np.max(np.abs(x)))
    assert sol.residual < 1e-12


def test_constant_curvature_is_hydrostatic(g8, params):
    sys_ = assemble_stokes(params, g8, np.inf)
    sol = solve_stokes_step(sys_, curvature=np.full(g8.nx, 0.2))
    st = sol.state
    assert np.max(np.abs(st.velocity_vector())) < 1e-12
    p_lo, p_hi = st.p
    assert np.ptp(p_lo) < 1e-12 and np.ptp(p_hi) < 1e-12
    assert np.allclose(st.jump_p, p_hi[0, 0] - p_lo[0, 0], atol=1e-12)


def test_random_forcing_divergence_free(g8, params, rng):
    sys_ = assemble_stokes(params, g8, 1e-2)
    f = zero_data_fields(g8)
    f["g1"] = {k: rng.standard_normal(v.shape) for k, v in f["g1"].items()}
    st = solve_stokes_step(sys_, f).state
    for s in (LO, HI):
        u1, u2 = st.slab("u1", s), st.slab("u2", s)
        div = (u1[1:] - u1[:-1]) / g8.dx + (u2[:, 1:] - u2[:, :-1]) / g8.dy(s)
        assert np.max(np.abs(div)) < 1e-10
    # continuity and no-slip
    assert np.max(np.abs(st["u2_hi"][:, 0] - st["u2_lo"][:, -1])) < 1e-12
    assert np.max(np.abs(st["u2_lo"][:, 0])) < 1e-14 and np.max(np.abs(st["u2_hi"][:, -1])) < 1e-14


def test_incompatible_divergence(g8, params):
    f = zero_data_fields(g8)
    f["g2"] = (np.ones((g8.nx, g8.ny_lo)), np.zeros((g8.nx, g8.ny_hi)))
    with pytest.raises(IncompatibleDivergence):
        solve_stokes_step(assemble_stokes(params, g8, 1e-2), f)


def test_rejects_bad_dt(g8, params):
    with pytest.raises(ValidationError):
        assemble_stokes(params, g8, 0.0)
