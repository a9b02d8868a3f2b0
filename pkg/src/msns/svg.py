"""Static SVG plots: height profiles, energy decay and spectra.

Output is plain text built from fixed-precision numbers, so identical input
gives byte-identical files.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .diagnostics import DiagnosticsSeries
from .errors import EmptyData, ValidationError

__all__ = ["emit_svg", "render_svg", "KINDS"]

KINDS = ("height-profile", "energy-decay", "spectrum-scatter")

WIDTH, HEIGHT = 640, 400
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 30, 50


class _Frame:
    """Affine map from data coordinates to the plot box (y up)."""

    def __init__(self, xlim, ylim):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        if self.x1 == self.x0:
            self.x0, self.x1 = self.x0 - 0.5, self.x0 + 0.5
        if self.y1 == self.y0:
            self.y0, self.y1 = self.y0 - 0.5, self.y0 + 0.5
        self.w = WIDTH - LEFT - RIGHT
        self.h = HEIGHT - TOP - BOTTOM

    def px(self, x):
        return LEFT + (np.asarray(x, float) - self.x0) / (self.x1 - self.x0) * self.w

    def py(self, y):
        return TOP + (self.y1 - np.asarray(y, float)) / (self.y1 - self.y0) * self.h


def _f(v) -> str:
    return f"{float(v):.3f}"


def _axes(fr: _Frame, title, xlabel, ylabel, ylog=False) -> list[str]:
    out = [
        f'<rect x="{LEFT}" y="{TOP}" width="{fr.w}" height="{fr.h}" fill="none" stroke="black"/>',
        f'<text x="{WIDTH / 2:.1f}" y="{TOP - 10}" text-anchor="middle" font-size="14">{title}</text>',
        f'<text x="{WIDTH / 2:.1f}" y="{HEIGHT - 10}" text-anchor="middle" font-size="12">{xlabel}</text>',
        f'<text x="15" y="{TOP + fr.h / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 15 {TOP + fr.h / 2:.1f})">{ylabel}</text>',
    ]
    for x in np.linspace(fr.x0, fr.x1, 5):
        X = fr.px(x)
        out.append(f'<line x1="{_f(X)}" y1="{TOP + fr.h}" x2="{_f(X)}" y2="{TOP + fr.h + 5}" stroke="black"/>')
        out.append(f'<text x="{_f(X)}" y="{TOP + fr.h + 18}" text-anchor="middle" font-size="10">{x:.3g}</text>')
    for y in np.linspace(fr.y0, fr.y1, 5):
        Y = fr.py(y)
        lab = f"1e{y:.2g}" if ylog else f"{y:.3g}"
        out.append(f'<line x1="{LEFT - 5}" y1="{_f(Y)}" x2="{LEFT}" y2="{_f(Y)}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 8}" y="{_f(Y + 3)}" text-anchor="end" font-size="10">{lab}</text>')
    return out


def _polyline(fr: _Frame, x, y, cls: str) -> str:
    pts = " ".join(f"{_f(a)},{_f(b)}" for a, b in zip(fr.px(x), fr.py(y)))
    return f'<polyline class="{cls}" fill="none" stroke="steelblue" stroke-width="1.5" points="{pts}"/>'


def _wrap(body: list[str]) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">'
    )
    return "\n".join([head, '<rect width="100%" height="100%" fill="white"/>', *body, "</svg>"]) + "\n"


def _height_data(data):
    if isinstance(data, dict):
        h = np.asarray(data["h"], float)
        width = float(data.get("width", 1.0))
        x = (np.arange(h.size) + 0.5) * width / max(h.size, 1)
        return x, h
    if hasattr(data, "h") and hasattr(data, "grid"):
        return data.grid.x_centers, np.asarray(data.h, float)
    x, h = data
    return np.asarray(x, float), np.asarray(h, float)


def _series_data(data, baseline):
    if isinstance(data, DiagnosticsSeries):
        t, y = data.column("t"), data.column("E")
    else:
        t, y = (np.asarray(a, float) for a in data)
    return t, y - baseline


def render_svg(data, kind: str, log: bool = True, baseline: float = 0.0, zero_tol: float | None = None) -> str:
    """SVG text for ``kind`` in :data:`KINDS`.

    ``height-profile`` takes a state, a snapshot dict or ``(x, h)``; the y
    range is symmetric so ``h = 0`` sits on the midline.  ``energy-decay``
    takes a series or ``(t, E)`` and plots ``E - baseline``, on a log axis
    when ``log``.  ``spectrum-scatter`` takes eigenvalues (or a result with
    ``eigenvalues``) and draws a circle of radius ``zero_tol`` at the origin.
    """
    if kind not in KINDS:
        raise ValidationError(f"unknown plot kind {kind!r}; expected one of {KINDS}")
    if kind == "height-profile":
        x, h = _height_data(data)
        if h.size == 0:
            raise EmptyData("height profile is empty")
        amp = float(np.max(np.abs(h))) or 1.0
        fr = _Frame((float(x.min()), float(x.max())), (-1.1 * amp, 1.1 * amp))
        body = _axes(fr, "interface height", "x", "h")
        body.append(f'<line class="midline" x1="{LEFT}" y1="{_f(fr.py(0))}" x2="{LEFT + fr.w}" y2="{_f(fr.py(0))}" stroke="#bbb"/>')
        body.append(_polyline(fr, x, h, "profile"))
        return _wrap(body)
    if kind == "energy-decay":
        t, y = _series_data(data, baseline)
        if t.size == 0:
            raise EmptyData("series is empty")
        if log:
            if np.any(y <= 0):
                raise ValidationError("log axis needs E - baseline > 0 at every record")
            y = np.log10(y)
        lo, hi = float(y.min()), float(y.max())
        pad = 0.05 * (hi - lo) if hi > lo else 0.5
        fr = _Frame((float(t.min()), float(t.max())), (lo - pad, hi + pad))
        body = _axes(fr, "energy", "t", "E - E_ref", ylog=log)
        body.append(_polyline(fr, t, y, "energy"))
        return _wrap(body)
    lam = np.asarray(getattr(data, "eigenvalues", data), dtype=complex)
    if lam.size == 0:
        raise EmptyData("no eigenvalues")
    if zero_tol is None:
        zero_tol = float(getattr(data, "zero_tol", 1e-8 * np.max(np.abs(lam))))
    re, im = lam.real, lam.imag
    rx = max(float(np.max(np.abs(re))), 1e-300)
    ry = max(float(np.max(np.abs(im))), 0.1 * rx)
    fr = _Frame((-1.05 * rx, 0.05 * rx), (-1.1 * ry, 1.1 * ry))
    body = _axes(fr, "spectrum", "Re", "Im")
    r_px = max(zero_tol / (fr.x1 - fr.x0) * fr.w, 0.0)
    body.append(
        f'<circle class="zero-tol" cx="{_f(fr.px(0))}" cy="{_f(fr.py(0))}" r="{r_px:.6g}" '
        f'data-r="{zero_tol:.17g}" fill="none" stroke="red"/>'
    )
    for a, b in zip(re, im):
        body.append(
            f'<circle class="eig" cx="{_f(fr.px(a))}" cy="{_f(fr.py(b))}" r="2" '
            f'data-re="{a:.17g}" data-im="{b:.17g}" fill="black"/>'
        )
    return _wrap(body)


def emit_svg(data, kind: str, path, **kw) -> Path:
    """Write :func:`render_svg` output to ``path``."""
    text = render_svg(data, kind, **kw)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(text)
    return path
