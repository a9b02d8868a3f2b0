"""CSV, JSON and manifest writers."""
from __future__ import annotations

import csv
import hashlib
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .diagnostics import COLUMNS, DiagnosticsRecord, DiagnosticsSeries

__all__ = [
    "RunManifest",
    "write_series",
    "read_series",
    "write_snapshots",
    "read_snapshots",
    "write_eigenvalues",
    "read_eigenvalues",
    "write_json",
    "config_hash",
]

HEADER = ",".join(COLUMNS)


def _fmt(x: float) -> str:
    # 17 significant digits round-trip every double
    return f"{x:.17g}"


def _open(path, mode="w"):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return open(path, mode, newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot open {path} for writing: {exc}") from exc


def write_series(series: DiagnosticsSeries, path) -> Path:
    """Write one CSV row per record with the header of :data:`COLUMNS`."""
    with _open(path) as fh:
        fh.write(HEADER + "\n")
        for rec in series.records:
            fh.write(",".join(_fmt(getattr(rec, c)) for c in COLUMNS) + "\n")
    return Path(path)


def read_series(path) -> DiagnosticsSeries:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        recs = [DiagnosticsRecord(*(float(v) for v in row)) for row in reader if row]
    return DiagnosticsSeries(recs)


def write_snapshots(snapshots, path) -> Path:
    """JSON lines, one state record per line."""
    with _open(path) as fh:
        for snap in snapshots:
            fh.write(json.dumps(snap, separators=(",", ":")) + "\n")
    return Path(path)


def read_snapshots(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_eigenvalues(eigs, path) -> Path:
    with _open(path) as fh:
        fh.write("re,im\n")
        for lam in np.asarray(eigs, dtype=complex):
            fh.write(f"{_fmt(lam.real)},{_fmt(lam.imag)}\n")
    return Path(path)


def read_eigenvalues(path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0] + 1j * data[:, 1]


def write_json(obj, path) -> Path:
    with _open(path) as fh:
        fh.write(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return Path(path)


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def config_hash(doc: dict) -> str:
    text = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass
class RunManifest:
    """Record of one CLI run: config echo, version, hash, outputs, timings."""

    command: str
    config: dict
    version: str
    config_hash: str
    outputs: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    status: str = "ok"

    def add(self, path) -> Path:
        self.outputs.append(str(path))
        return Path(path)

    def missing(self) -> list[str]:
        return [p for p in self.outputs if not Path(p).exists()]

    def write(self, path) -> Path:
        self.timings.setdefault("written_at", time.strftime("%Y-%m-%dT%H:%M:%S"))
        return write_json(asdict(self), path)
