import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from msns.diagnostics import (
    DiagnosticsSeries,
    admissible_exponents,
    decay_fit,
    dissipation,
    energy,
    masses,
)
from msns.errors import DegenerateWindow
from msns.geometry import HI, LO
from msns.state import FluidParams, State


def _tag(s):
    return "lo" if s == LO else "hi"


def test_flat_energy(grid16):
    E, length, kin = energy(State(grid16), FluidParams(sigma=2.5))
    assert length == pytest.approx(2.0, abs=1e-15)
    assert E == pytest.approx(5.0, abs=1e-14)
    assert kin == 0.0


def test_interface_length_oracle(domain):
    from msns.geometry import GridSpec

    eps, W = 0.05, domain.width
    exact = quad(lambda x: np.sqrt(1 + (eps * np.pi / W * np.sin(np.pi * x / W)) ** 2), 0, W, epsabs=1e-14)[0]
    assert exact == pytest.approx(W + eps**2 * np.pi**2 / (4 * W), abs=eps**4 * 2.0)
    errs = []
    for n in (32, 64):
        g = GridSpec(domain, n, n // 2, n // 2)
        st_ = State.from_height(g, eps * np.cos(np.pi * g.x_centers / W))
        errs.append(abs(energy(st_, FluidParams())[1] - exact))
    assert errs[1] < 1e-6
    assert np.log2(errs[0] / errs[1]) > 1.8


def test_kinetic_uniform_flow(grid16):
    P = FluidParams(rho_plus=3.0)
    st_ = State(grid16)
    for s in (LO, HI):
        st_[f"u1_{_tag(s)}"] = 1.0
    kin = energy(st_, P)[2]
    # 1/2 rho |u|^2 over each unit-depth slab of width 2
    assert kin == pytest.approx(0.5 * 1.0 * 2.0 + 0.5 * 3.0 * 2.0, rel=1e-14)
    for s in (LO, HI):
        st_[f"u1_{_tag(s)}"] = 2.0
    assert energy(st_, P)[2] == pytest.approx(4 * kin, rel=1e-14)


def test_dissipation_zero_and_shear(grid16):
    P = FluidParams(mu_plus=2.0)
    st_ = State(grid16)
    assert dissipation(st_, P) == 0.0
    for s in (LO, HI):
        t = _tag(s)
        st_[f"u1_{t}"] = np.tile(grid16.y_centers(s), (grid16.nx + 1, 1))
        yf = grid16.y_faces(s)
        st_[f"t1_{t}"] = np.tile([yf[0], yf[-1]], (grid16.nx + 1, 1))
    # u = (y, 0): |Du|^2 = 1/2, area 2 per slab
    assert dissipation(st_, P) == pytest.approx(0.5 * 2 * (1.0 + 2.0), rel=1e-13)
    assert dissipation(st_, P, dissipation_factor=2.0) == pytest.approx(6.0, rel=1e-13)


def test_masses_flat(grid16):
    mean, lo, hi = masses(State(grid16))
    assert mean == 0.0
    assert lo == pytest.approx(2.0) and hi == pytest.approx(2.0)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-0.2, 0.2), min_size=16, max_size=16))
def test_masses_sum(h):
    from msns.geometry import DomainSpec, GridSpec

    grid16 = GridSpec(DomainSpec(), 16, 8, 8)
    lo, hi = masses(State.from_height(grid16, np.array(h)))[1:]
    assert lo + hi == pytest.approx(grid16.domain.area, abs=1e-13)


def test_decay_fit_exact_and_noisy(rng):
    t = np.linspace(0, 1, 101)
    rate, amp, res = decay_fit((t, 3.0 * np.exp(-2 * t)))
    assert rate == pytest.approx(2.0, abs=1e-6)
    assert amp == pytest.approx(3.0, rel=1e-9)
    assert res < 1e-12
    noisy = np.exp(-2 * t) * (1 + 1e-3 * rng.standard_normal(t.size))
    assert decay_fit((t, noisy))[0] == pytest.approx(2.0, rel=0.01)
    assert decay_fit((t, np.ones_like(t)))[0] == pytest.approx(0.0, abs=1e-12)


def test_decay_fit_series_window():
    t = np.linspace(0, 2, 201)
    ser = DiagnosticsSeries.from_arrays(t=t, max_h=np.where(t < 1, np.exp(-5 * t), np.exp(-5) * np.exp(-2 * (t - 1))))
    assert decay_fit(ser, window=(1.0, 2.0))[0] == pytest.approx(2.0, abs=1e-8)
    with pytest.raises(DegenerateWindow):
        decay_fit(ser, window=(1.0, 1.05))
    with pytest.raises(DegenerateWindow):
        decay_fit((t, np.zeros_like(t)))


def test_exponents_examples():
    ex = admissible_exponents(7.0, 1.95)
    assert ex.admissible and ex.pq_admissible
    assert ex.interval[0] == 3.0
    assert ex.r_upper == pytest.approx(7 * 1.95 / (6 - 1.95), rel=1e-15)
    assert ex.r_upper == pytest.approx(3.3704, abs=1e-4)
    assert admissible_exponents(7.0, 1.8).empty
    assert not admissible_exponents(7.0, 1.8).admissible
    assert not admissible_exponents(6.0, 1.95).pq_admissible
    assert not admissible_exponents(7.0, 2.0).admissible


@settings(max_examples=50, deadline=None)
@given(st.floats(1.8001, 1.9999))
def test_exponent_upper_monotone(q):
    a = admissible_exponents(8.0, q).r_upper
    b = admissible_exponents(8.0, min(q + 1e-4, 1.99999)).r_upper
    assert 3.0 < a <= 3.5 and b >= a
