import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from msns.assembly import zero_data_fields
from msns.coupled import (
    COMPAT_CONDITIONS,
    LinearData,
    SimConfig,
    check_compatibility,
    linear_step,
    nonlinear_step,
    simulate,
    splitting_step,
)
from msns.errors import IncompatibleData, MapNotInvertible, ValidationError
from msns.geometry import DomainSpec, GridSpec
from msns.state import FluidParams, State


def cos_state(g, eps):
    s = State(g)
    s["h"] = eps * np.cos(np.pi * g.x_centers / g.domain.width)
    return s


def test_zero_data_zero_solution(grid16, params):
    out = linear_step(LinearData.zeros(grid16), params, grid16, 1e-3)
    assert np.max(np.abs(out.z)) == 0.0


def test_mean_free_g6_conserves_mean(grid16, params, rng):
    prev = cos_state(grid16, 0.01)
    prev["h"] = prev["h"] + 0.003
    data = LinearData.zeros(grid16, prev)
    g6 = rng.standard_normal(grid16.nx)
    data.fields["g6"] = g6 - g6.mean()
    out = linear_step(data, params, grid16, 1e-3)
    assert abs(out.h.mean() - prev.h.mean()) < 1e-15


def test_g6_with_mean_rejected(grid16, params):
    data = LinearData.zeros(grid16)
    data.fields["g6"] = np.ones(grid16.nx)
    with pytest.raises(IncompatibleData):
        linear_step(data, params, grid16, 1e-3)


def test_single_mode_amplification(params):
    from msns.spectral import ms_dispersion

    g = GridSpec(DomainSpec(), 128, 64, 64)
    k = np.pi / g.domain.width
    lam = ms_dispersion(k, params, g.domain)
    dt = 0.5 / lam
    prev = cos_state(g, 1e-3)
    out = linear_step(LinearData.zeros(g, prev), params, g, dt, couple_stokes=False)
    amp = out.h @ prev.h / (prev.h @ prev.h)
    assert amp == pytest.approx(1.0 / (1.0 + dt * lam), rel=0.02)


def test_splitting_zero_data(grid16, params):
    out, info = splitting_step(LinearData.zeros(grid16), params, grid16, 1e-3, sweeps=1)
    assert np.max(np.abs(out.z)) == 0.0


def _random_data(g, rng):
    f = zero_data_fields(g)
    f["g1"] = {k: rng.standard_normal(v.shape) for k, v in f["g1"].items()}
    f["g2"] = tuple(x - x.mean() for x in (rng.standard_normal(a.shape) for a in f["g2"]))
    g6 = rng.standard_normal(g.nx)
    f["g6"] = g6 - g6.mean()
    f["g9"] = rng.standard_normal(g.nx)
    prev = State(g)
    prev["h"] = 1e-2 * rng.standard_normal(g.nx)
    return LinearData(g, f, prev)


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1e-2, 1e-3, 1e-4]))
def test_splitting_matches_monolithic(seed, dt):
    g = GridSpec(DomainSpec(), 16, 8, 8)
    p = FluidParams()
    data = _random_data(g, np.random.default_rng(seed))
    a = linear_step(data, p, g, dt)
    b, _ = splitting_step(data, p, g, dt, sweeps=8)
    assert np.max(np.abs(a.z - b.z)) <= 1e-8 * np.max(np.abs(a.z))


def test_splitting_contraction_decreases_with_dt(grid16, params, rng):
    data = _random_data(grid16, rng)
    first = []
    for dt in (1e-2, 1e-3, 1e-4):
        _, info = splitting_step(data, params, grid16, dt, sweeps=2)
        first.append(info.factors[0])
    assert first[0] > first[1] > first[2]


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-2.0, 2.0))
def test_linear_step_is_linear(seed, alpha):
    g = GridSpec(DomainSpec(), 8, 4, 4)
    p = FluidParams()
    data = _random_data(g, np.random.default_rng(seed))
    a = linear_step(data.scaled(alpha), p, g, 1e-3).z
    b = alpha * linear_step(data, p, g, 1e-3).z
    assert np.max(np.abs(a - b)) <= 1e-10 * max(1.0, np.max(np.abs(b)))


def test_equilibrium_step_is_exact(grid16, params):
    s = State(grid16)
    s["h"] = 0.02
    cfg = SimConfig(params=params, grid=grid16, dt=1e-3, t_end=0.01)
    out = nonlinear_step(s, cfg)
    assert np.array_equal(out.z, s.z)


def test_small_height_iterations(grid16, params):
    cfg = SimConfig(params=params, grid=grid16, dt=1e-3, t_end=0.01, tol=1e-10, max_iters=12)
    res = simulate(cfg, cos_state(grid16, 1e-3))
    assert max(res.iterations) <= 6


def test_map_not_invertible(grid16, params):
    cfg = SimConfig(params=params, grid=grid16, dt=1e-3, t_end=0.01)
    with pytest.raises(MapNotInvertible):
        nonlinear_step(cos_state(grid16, 0.05), cfg)


def test_config_validation(grid16, params):
    with pytest.raises(ValidationError):
        SimConfig(params=params, grid=grid16, dt=-1.0)
    with pytest.raises(ValidationError):
        SimConfig(params=FluidParams(rho_plus=2.0), grid=grid16, dt=1e-3)
    with pytest.raises(ValidationError):
        SimConfig(params=params, grid=grid16, dt=1e-3, max_iters=0)
    SimConfig(params=FluidParams(rho_plus=2.0), grid=grid16, dt=1e-3, density_mode="general")


def test_compatibility_basic(grid16, params):
    rep = check_compatibility(State(grid16), np.zeros(grid16.nx), params, grid16)
    assert rep.passed and max(rep.residuals.values()) == 0.0
    assert set(rep.residuals) == set(COMPAT_CONDITIONS)
    h0 = 0.01 * np.cos(np.pi * grid16.x_centers / 2)
    assert check_compatibility(State(grid16), h0, params, grid16).passed
    u0 = State(grid16)
    u0["u2_hi"][:, -1] = 1e-3
    rep = check_compatibility(u0, h0, params, grid16)
    assert not rep.passed and "no_slip" in rep.failed
    assert "FAIL no_slip" in str(rep)


def test_simulate_rejects_incompatible(grid16, params):
    u0 = State(grid16)
    u0["t1_hi"][:, 1] = 1e-3
    cfg = SimConfig(params=params, grid=grid16, dt=1e-3, t_end=0.002)
    with pytest.raises(IncompatibleData, match="no_slip"):
        simulate(cfg, u0)


def test_simulate_zero_state(grid16, params):
    cfg = SimConfig(params=params, grid=grid16, dt=1e-3, t_end=0.1, save_every=50)
    res = simulate(cfg)
    E = res.series.column("E")
    assert len(res.series) == 101 and np.all(E == params.sigma * grid16.domain.width)
    assert np.all(res.series.column("max_h") == 0.0) and len(res.snapshots) == 3


def test_simulate_monotone_decay(grid16, params):
    cfg = SimConfig(params=params, grid=grid16, dt=2e-3, t_end=0.4)
    res = simulate(cfg, cos_state(grid16, 0.01))
    hmax = res.series.column("max_h")
    assert np.all(np.diff(hmax[10:]) < 0)
    assert abs(res.series.column("mean_h")[-1]) < 1e-15


def test_anderson_option_reaches_same_state(grid16, params):
    base = SimConfig(params=params, grid=grid16, dt=1e-3, t_end=0.02, tol=1e-12, max_iters=20)
    a = simulate(base, cos_state(grid16, 0.01)).final
    b = simulate(base.with_(accel="anderson"), cos_state(grid16, 0.01)).final
    c = simulate(base.with_(predictor=False), cos_state(grid16, 0.01)).final
    assert np.max(np.abs(a.z - b.z)) < 1e-10 * np.max(np.abs(a.z))
    assert np.max(np.abs(a.z - c.z)) < 1e-10 * np.max(np.abs(a.z))
