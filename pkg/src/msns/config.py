"""JSON run configuration.

A document has the sections ``params``, ``domain``, ``grid``, ``time``,
``solver``, ``outputs`` and ``initial``; every section and key is optional
and falls back to the defaults in :data:`DEFAULTS`.  Unknown sections or keys
raise :class:`~msns.errors.ValidationError`.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .coupled import SimConfig
from .errors import ValidationError
from .geometry import DomainSpec, GridSpec
from .state import FluidParams, State

__all__ = ["DEFAULTS", "RunConfig", "load_config", "parse_config", "dump_config"]

DEFAULTS: dict = {
    "params": {"rho_plus": 1.0, "rho_minus": 1.0, "mu_plus": 1.0, "mu_minus": 1.0, "sigma": 1.0},
    "domain": {"width": 2.0, "L1": -1.0, "L2": 1.0},
    "grid": {"nx": 32, "ny_lo": 16, "ny_hi": 16},
    # dt = null selects 0.1 / lambda(k_max), which is tiny on fine grids
    "time": {"dt": 0.001, "t_end": 0.1},
    "solver": {
        "max_iters": 8,
        "tol": 1e-10,
        "density_mode": "equal",
        "couple_stokes": True,
        "dissipation_factor": 1.0,
        "d0": None,
        "accel": "none",
        "predictor": True,
    },
    "outputs": {"dir": "out", "save_every": 0, "svg": True},
    # h0 = amplitude * cos(mode * pi * x / W)
    "initial": {"amplitude": 0.001, "mode": 1},
}


def _merge(doc: dict) -> dict:
    if not isinstance(doc, dict):
        raise ValidationError("configuration must be a JSON object")
    out = copy.deepcopy(DEFAULTS)
    for sec, body in doc.items():
        if sec not in DEFAULTS:
            raise ValidationError(f"unknown section {sec!r}; expected one of {sorted(DEFAULTS)}")
        if not isinstance(body, dict):
            raise ValidationError(f"section {sec!r} must be an object")
        for key, val in body.items():
            if key not in DEFAULTS[sec]:
                raise ValidationError(f"unknown key {sec}.{key}; expected one of {sorted(DEFAULTS[sec])}")
            out[sec][key] = val
    return out


def _num(sec, key, val, kind=float):
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ValidationError(f"{sec}.{key} must be a number, got {val!r}")
    if kind is int:
        if int(val) != val:
            raise ValidationError(f"{sec}.{key} must be an integer, got {val!r}")
        return int(val)
    return float(val)


@dataclass
class RunConfig:
    """Parsed configuration: physical setup, solver settings and outputs."""

    sim: SimConfig
    outputs: dict = field(default_factory=dict)
    initial: dict = field(default_factory=dict)
    doc: dict = field(default_factory=dict, repr=False)

    @property
    def params(self) -> FluidParams:
        return self.sim.params

    @property
    def grid(self) -> GridSpec:
        return self.sim.grid

    def initial_state(self) -> State:
        g = self.grid
        st = State(g)
        m = self.initial["mode"]
        st["h"] = self.initial["amplitude"] * np.cos(m * np.pi * g.x_centers / g.domain.width)
        return st

    def to_dict(self) -> dict:
        return copy.deepcopy(self.doc)


def parse_config(doc: dict) -> RunConfig:
    """Validate ``doc`` and build the run configuration."""
    d = _merge(doc)
    P = d["params"]
    params = FluidParams(**{k: _num("params", k, v) for k, v in P.items()})
    domain = DomainSpec(**{k: _num("domain", k, v) for k, v in d["domain"].items()})
    grid = GridSpec(domain, **{k: _num("grid", k, v, int) for k, v in d["grid"].items()})
    T, S, O, I = d["time"], d["solver"], d["outputs"], d["initial"]
    dt = None if T["dt"] is None else _num("time", "dt", T["dt"])
    if dt is not None and not dt > 0:
        raise ValidationError(f"time.dt must be > 0, got {dt}")
    for key in ("couple_stokes", "predictor"):
        if not isinstance(S[key], bool):
            raise ValidationError(f"solver.{key} must be true or false")
    if not isinstance(O["svg"], bool):
        raise ValidationError("outputs.svg must be true or false")
    if not isinstance(O["dir"], str):
        raise ValidationError("outputs.dir must be a string")
    sim = SimConfig(
        params=params,
        domain=domain,
        grid=grid,
        dt=dt,
        t_end=_num("time", "t_end", T["t_end"]),
        max_iters=_num("solver", "max_iters", S["max_iters"], int),
        tol=_num("solver", "tol", S["tol"]),
        density_mode=S["density_mode"],
        couple_stokes=S["couple_stokes"],
        dissipation_factor=_num("solver", "dissipation_factor", S["dissipation_factor"]),
        d0=None if S["d0"] is None else _num("solver", "d0", S["d0"]),
        save_every=_num("outputs", "save_every", O["save_every"], int),
        accel=S["accel"],
        predictor=S["predictor"],
    )
    if sim.save_every < 0:
        raise ValidationError("outputs.save_every must be >= 0")
    amp = _num("initial", "amplitude", I["amplitude"])
    mode = _num("initial", "mode", I["mode"], int)
    if mode < 0:
        raise ValidationError("initial.mode must be >= 0")
    return RunConfig(sim, dict(O), {"amplitude": amp, "mode": mode}, d)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
    return parse_config(doc)


def dump_config(cfg: RunConfig) -> str:
    """Serialise the fully resolved document (defaults filled in)."""
    return json.dumps(cfg.doc, indent=2, sort_keys=True) + "\n"
