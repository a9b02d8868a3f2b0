"""Physical parameters, unknown layout and the discrete state vector.

Per slab ``s`` (0 lower, 1 upper) with ``ny`` rows the unknown blocks are

* ``u1_s``  ``(nx+1, ny)``   horizontal velocity on vertical faces
* ``u2_s``  ``(nx, ny+1)``   vertical velocity on horizontal faces; the
  interface row is stored once per slab, so ``u2`` is doubled there
* ``t1_s``  ``(nx+1, 2)``    horizontal-velocity traces on the slab bottom
  and top face rows
* ``s2_s``  ``(2, ny+1)``    vertical-velocity traces on the left and right
  walls
* ``p_s``, ``eta_s``  ``(nx, ny)`` cell pressure and chemical potential

plus the interface pressure jump ``jp`` ``(nx,)``, a scalar multiplier ``c``
pinning the pressure mean, and the height ``h`` ``(nx,)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import AssemblyError, ValidationError
from .geometry import HI, LO, GridSpec, HeightField

__all__ = ["FluidParams", "Layout", "State"]


@dataclass(frozen=True)
class FluidParams:
    """Densities, viscosities (per phase) and surface tension."""

    rho_plus: float = 1.0
    rho_minus: float = 1.0
    mu_plus: float = 1.0
    mu_minus: float = 1.0
    sigma: float = 1.0

    def __post_init__(self):
        for name in ("rho_plus", "rho_minus", "mu_plus", "mu_minus", "sigma"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValidationError(f"params.{name} must be > 0, got {v}")

    def rho(self, s: int) -> float:
        return self.rho_minus if s == LO else self.rho_plus

    def mu(self, s: int) -> float:
        return self.mu_minus if s == LO else self.mu_plus

    @property
    def equal_density(self) -> bool:
        return self.rho_plus == self.rho_minus

    @property
    def density_jump(self) -> float:
        return self.rho_plus - self.rho_minus


_VELOCITY = ("u1", "u2", "t1", "s2")


class Layout:
    """Offsets of every unknown block in the flat solution vector."""

    def __init__(self, grid: GridSpec):
        self.grid = grid
        nx = grid.nx
        shapes: list[tuple[str, tuple[int, ...]]] = []
        for name in _VELOCITY:
            for s, tag in ((LO, "lo"), (HI, "hi")):
                ny = grid.ny(s)
                shape = {
                    "u1": (nx + 1, ny),
                    "u2": (nx, ny + 1),
                    "t1": (nx + 1, 2),
                    "s2": (2, ny + 1),
                }[name]
                shapes.append((f"{name}_{tag}", shape))
        shapes += [("p_lo", (nx, grid.ny_lo)), ("p_hi", (nx, grid.ny_hi))]
        shapes += [("jp", (nx,)), ("c", (1,))]
        self.n_stokes_marker = len(shapes)
        shapes += [("h", (nx,)), ("eta_lo", (nx, grid.ny_lo)), ("eta_hi", (nx, grid.ny_hi))]
        self.shapes = dict(shapes)
        self.slices: dict[str, slice] = {}
        off = 0
        for name, shape in shapes:
            n = int(np.prod(shape))
            self.slices[name] = slice(off, off + n)
            off += n
        self.size = off
        self.n_velocity = self.slices["s2_hi"].stop
        self.n_stokes = self.slices["c"].stop

    def index(self, name: str) -> np.ndarray:
        """Global indices of block ``name`` reshaped to the block shape."""
        sl = self.slices[name]
        return np.arange(sl.start, sl.stop).reshape(self.shapes[name])

    def view(self, z: np.ndarray, name: str) -> np.ndarray:
        if z.shape[0] < self.slices[name].stop:
            raise AssemblyError(f"vector of length {z.shape[0]} too short for block {name}")
        return z[self.slices[name]].reshape(self.shapes[name])

    def blocks(self, z: np.ndarray) -> dict[str, np.ndarray]:
        return {name: self.view(z, name) for name in self.shapes if self.slices[name].stop <= z.shape[0]}

    def zeros(self) -> np.ndarray:
        return np.zeros(self.size)

    @staticmethod
    def slab_name(base: str, s: int) -> str:
        return f"{base}_{'lo' if s == LO else 'hi'}"


class State:
    """One time level of the discrete fields, stored as a flat vector."""

    def __init__(self, grid: GridSpec, z: np.ndarray | None = None, t: float = 0.0, d0: float = np.inf):
        self.grid = grid
        self.layout = layout_for(grid)
        if z is None:
            z = self.layout.zeros()
        z = np.asarray(z, dtype=float)
        if z.shape != (self.layout.size,):
            raise AssemblyError(f"state vector has shape {z.shape}, expected ({self.layout.size},)")
        self.z = z
        self.t = float(t)
        self.d0 = d0
        self.meta: dict = {}

    def __getitem__(self, name: str) -> np.ndarray:
        return self.layout.view(self.z, name)

    def __setitem__(self, name: str, value) -> None:
        self.layout.view(self.z, name)[...] = value

    def copy(self) -> "State":
        out = State(self.grid, self.z.copy(), self.t, self.d0)
        out.meta = dict(self.meta)
        return out

    def slab(self, base: str, s: int) -> np.ndarray:
        return self[Layout.slab_name(base, s)]

    @property
    def h(self) -> np.ndarray:
        return self["h"]

    @property
    def height(self) -> HeightField:
        return HeightField(self["h"].copy(), self.d0)

    @property
    def u(self) -> dict[str, np.ndarray]:
        return {f"{b}_{t}": self[f"{b}_{t}"] for b in _VELOCITY for t in ("lo", "hi")}

    @property
    def p(self) -> tuple[np.ndarray, np.ndarray]:
        return self["p_lo"], self["p_hi"]

    @property
    def eta(self) -> tuple[np.ndarray, np.ndarray]:
        return self["eta_lo"], self["eta_hi"]

    @property
    def jump_p(self) -> np.ndarray:
        return self["jp"]

    def velocity_vector(self) -> np.ndarray:
        return self.z[: self.layout.n_velocity]

    @classmethod
    def from_height(cls, grid: GridSpec, h, t: float = 0.0, d0: float = np.inf) -> "State":
        st = cls(grid, t=t, d0=d0)
        st["h"] = np.asarray(h, dtype=float)
        return st

    def to_dict(self) -> dict:
        out = {name: self[name].tolist() for name in self.layout.shapes}
        out["t"] = self.t
        out["grid"] = {"nx": self.grid.nx, "ny_lo": self.grid.ny_lo, "ny_hi": self.grid.ny_hi}
        return out

    @classmethod
    def from_dict(cls, grid: GridSpec, data: dict) -> "State":
        st = cls(grid, t=float(data.get("t", 0.0)))
        for name, shape in st.layout.shapes.items():
            if name in data:
                arr = np.asarray(data[name], dtype=float)
                if arr.shape != shape:
                    raise ValidationError(f"state field {name} has shape {arr.shape}, expected {shape}")
                st[name] = arr
        return st


@lru_cache(maxsize=32)
def layout_for(grid) -> Layout:
    """Shared :class:`Layout` instance for ``grid``."""
    return Layout(grid)
