import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from msns.errors import MapNotInvertible, ValidationError
from msns.geometry import HI, LO, DomainSpec, GridSpec, check_invertibility, hanzawa_coeffs, make_bump


def test_bump_plateau_and_support(domain):
    chi = make_bump(domain)
    assert chi.delta == pytest.approx(1.0 / 3.0)
    assert chi(0.0) == 1.0
    assert chi(0.4) == 0.0
    assert chi(chi.delta / 2) == 1.0 and chi(-chi.delta / 2) == 1.0


def test_bump_sup_derivative_matches_dense_sampling(domain):
    chi = make_bump(domain)
    # independent oracle: numerical derivative of the quintic pieces on a dense grid
    s = np.linspace(chi.delta / 2, chi.delta, 2_000_001)
    poly = np.polynomial.Polynomial(chi.pieces).deriv()
    assert abs(chi.chi_prime_sup - np.max(np.abs(poly(s)))) < 1e-10
    assert chi.chi_prime_sup == pytest.approx(11.25, abs=1e-10)


@given(st.floats(-1.0, 1.0))
def test_bump_range_and_symmetry(s):
    chi = make_bump(DomainSpec())
    v = float(chi(s))
    assert 0.0 <= v <= 1.0
    assert v == float(chi(-s))


def test_bump_derivatives_match_finite_differences(domain):
    chi = make_bump(domain)
    s = np.linspace(-0.33, 0.33, 301)
    e = 1e-6
    assert np.allclose(chi.d1(s), (chi(s + e) - chi(s - e)) / (2 * e), atol=1e-6)
    assert np.allclose(chi.d2(s), (chi.d1(s + e) - chi.d1(s - e)) / (2 * e), atol=1e-4)


def test_grid_validation(domain):
    with pytest.raises(ValidationError):
        GridSpec(domain, 3, 8, 8)
    with pytest.raises(ValidationError):
        DomainSpec(width=2.0, L1=0.5, L2=1.0)


def test_identity_map_at_zero_height(grid16):
    c = hanzawa_coeffs(np.zeros(grid16.nx), make_bump(grid16.domain), grid16)
    assert c.is_identity
    for J in c.J:
        assert np.all(J == 1.0)
    for M in c.inv_jac:
        assert np.all(M == np.eye(2))


def test_constant_height_plateau(grid16):
    chi = make_bump(grid16.domain)
    c = hanzawa_coeffs(np.full(grid16.nx, 0.01), chi, grid16)
    y = grid16.y_centers(HI)
    flat = np.abs(chi.d1(y)) == 0.0
    assert np.any(flat)
    assert np.all(c["cell", HI].J[:, flat] == 1.0)


def test_jacobian_pointwise_formula(grid32):
    chi = make_bump(grid32.domain)
    x = grid32.x_centers
    h = 0.05 * np.cos(np.pi * x / grid32.domain.width)
    c = hanzawa_coeffs(h, chi, grid32)
    for s in (LO, HI):
        y = grid32.y_centers(s)
        direct = 1.0 + h[:, None] * chi.d1(y)[None, :]
        assert np.max(np.abs(c["cell", s].J - direct)) < 1e-14


def test_invertibility_report(domain):
    chi = make_bump(domain)
    b = chi.invertibility_bound
    assert check_invertibility(np.zeros(8), chi).margin == b
    assert not check_invertibility(np.full(8, 1.01 * b), chi).passed
    rep = check_invertibility(np.full(8, 0.9 * b), chi)
    assert rep.passed and rep.min_J_lower_bound >= 0.55 - 1e-15


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1.0, 1.0), min_size=16, max_size=16), st.floats(0.0, 0.9))
def test_min_jacobian_lower_bound(vals, frac):
    g = GridSpec(DomainSpec(), 16, 8, 8)
    chi = make_bump(g.domain)
    v = np.array(vals)
    m = np.max(np.abs(v))
    h = v / m * frac * chi.invertibility_bound if m > 0 else v
    c = hanzawa_coeffs(h, chi, g)
    bound = 1.0 - np.max(np.abs(h)) * chi.chi_prime_sup
    for s in (LO, HI):
        assert np.min(c["cell", s].J) >= bound - 1e-12
    assert c.min_J >= bound - 1e-12


def test_map_not_invertible(grid16):
    chi = make_bump(grid16.domain)
    with pytest.raises(MapNotInvertible):
        hanzawa_coeffs(np.full(grid16.nx, 0.2), chi, grid16)
