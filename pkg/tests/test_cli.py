import json
from pathlib import Path

import numpy as np
import pytest

from msns.cli import run_cli
from msns.io import read_eigenvalues

SMALL = {"grid": {"nx": 16, "ny_lo": 8, "ny_hi": 8}, "time": {"dt": 0.005, "t_end": 0.02},
         "outputs": {"save_every": 2}}


@pytest.fixture
def out(tmp_path, monkeypatch):
    monkeypatch.setenv("MSNS_OUTPUT_DIR", str(tmp_path / "o"))
    return tmp_path / "o"


def _cfg(tmp_path, doc):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(doc))
    return str(p)


def _manifest_ok(d):
    man = json.loads((d / "manifest.json").read_text())
    assert man["outputs"]
    for f in man["outputs"]:
        assert Path(f).exists()
    return man


def test_check_exponents(out, capsys):
    assert run_cli(["check-exponents", "--p", "7", "--q", "1.95"]) == 0
    text = capsys.readouterr().out
    assert "r interval (3, 3.3704]" in text and "admissible=true" in text
    _manifest_ok(out / "check-exponents")


def test_bad_dt_exit_1(out, tmp_path, capsys):
    assert run_cli(["simulate", _cfg(tmp_path, {"time": {"dt": 0}})]) == 1
    assert "dt must be > 0" in capsys.readouterr().err


def test_usage_error_exit_1(out, capsys):
    assert run_cli(["frobnicate"]) == 1
    assert "configuration schema" in capsys.readouterr().err


def test_spectrum(out, tmp_path, capsys):
    assert run_cli(["spectrum", _cfg(tmp_path, {"grid": SMALL["grid"]})]) == 0
    d = out / "spectrum"
    lam = read_eigenvalues(d / "eigenvalues.csv")
    rep = json.loads((d / "report.json").read_text())
    assert rep["passed"] and rep["n_eigenvalues"] == lam.size
    assert np.sum(np.abs(lam) <= rep["zero_tol"]) == 1
    assert "gap =" in capsys.readouterr().out
    _manifest_ok(d)


def test_simulate_then_check_compat(out, tmp_path, capsys):
    cfg = _cfg(tmp_path, SMALL)
    assert run_cli(["simulate", cfg]) == 0
    d = out / "simulate"
    man = _manifest_ok(d)
    names = {p.rsplit("/", 1)[-1] for p in man["outputs"]}
    assert {"series.csv", "snapshots.jsonl", "summary.json", "height.svg", "energy.svg"} <= names
    assert run_cli(["check-compat", cfg, str(d / "snapshots.jsonl")]) == 0
    assert "compatible=true" in capsys.readouterr().out


def test_check_compat_rejects(out, tmp_path, capsys):
    cfg = _cfg(tmp_path, SMALL)
    state = tmp_path / "bad.json"
    state.write_text(json.dumps({"h": [0.01] * 16, "u1_lo": np.ones((17, 8)).tolist()}))
    assert run_cli(["check-compat", cfg, str(state)]) == 1
    assert "compatible=false" in capsys.readouterr().out


def test_dispersion(out, tmp_path):
    assert run_cli(["dispersion", _cfg(tmp_path, {"grid": SMALL["grid"]})]) == 0
    lines = (out / "dispersion" / "dispersion.csv").read_text().splitlines()
    assert lines[0] == "mode,k,lambda_exact,lambda_discrete,rel_err"
    assert len(lines) == 1 + 8
    assert float(lines[1].split(",")[-1]) < 0.05
