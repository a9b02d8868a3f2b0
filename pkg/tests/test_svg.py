import re

import numpy as np
import pytest

from msns.diagnostics import DiagnosticsSeries
from msns.errors import EmptyData, ValidationError
from msns.spectral import spectrum
from msns.state import FluidParams, State
from msns.svg import emit_svg, render_svg


def _points(svg, cls):
    m = re.search(rf'<polyline class="{cls}"[^>]*points="([^"]+)"', svg)
    return np.array([[float(v) for v in p.split(",")] for p in m.group(1).split()])


def test_flat_profile_on_midline(grid16):
    svg = render_svg(State(grid16), "height-profile")
    mid = float(re.search(r'class="midline"[^>]*y1="([^"]+)"', svg).group(1))
    pts = _points(svg, "profile")
    assert pts.shape == (grid16.nx, 2)
    assert np.all(pts[:, 1] == mid)


def test_log_energy_is_straight():
    t = np.linspace(0, 1, 50)
    svg = render_svg((t, 1.0 + np.exp(-2 * t)), "energy-decay", baseline=1.0)
    pts = _points(svg, "energy")
    fit = np.polyval(np.polyfit(pts[:, 0], pts[:, 1], 1), pts[:, 0])
    assert np.max(np.abs(fit - pts[:, 1])) < 0.5
    with pytest.raises(ValidationError):
        render_svg((t, np.exp(-2 * t)), "energy-decay", baseline=1.0)
    assert "<polyline" in render_svg((t, t), "energy-decay", log=False)


def test_single_eigenvalue_inside_zero_circle(grid16):
    res = spectrum(FluidParams(), grid16)
    svg = render_svg(res, "spectrum-scatter")
    r = float(re.search(r'class="zero-tol"[^>]*data-r="([^"]+)"', svg).group(1))
    eigs = [complex(float(a), float(b)) for a, b in re.findall(r'class="eig"[^>]*data-re="([^"]+)" data-im="([^"]+)"', svg)]
    assert len(eigs) == res.eigenvalues.size
    assert sum(abs(z) <= r for z in eigs) == 1


def test_deterministic(tmp_path, grid16):
    ser = DiagnosticsSeries.from_arrays(t=np.linspace(0, 1, 20), E=2 + np.exp(-np.linspace(0, 1, 20)))
    a = emit_svg(ser, "energy-decay", tmp_path / "a.svg", baseline=2.0).read_bytes()
    b = emit_svg(ser, "energy-decay", tmp_path / "b.svg", baseline=2.0).read_bytes()
    assert a == b and b"\r" not in a


def test_errors():
    with pytest.raises(EmptyData):
        render_svg([], "spectrum-scatter")
    with pytest.raises(EmptyData):
        render_svg((np.array([]), np.array([])), "height-profile")
    with pytest.raises(ValidationError, match="unknown plot kind"):
        render_svg([1.0], "histogram")
