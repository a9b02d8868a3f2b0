"""Capillary geometry, staggered grid, bump function and reference-frame map.

The fluid occupies ``(0, W) x (L1, L2)`` with the reference interface on the
line ``y = 0``.  A height field ``h`` on ``(0, W)`` is pulled back to the fixed
frame through

    Theta_h(x, y) = (x, y + chi(y) h(x)),

whose Jacobian is ``[[1, 0], [h' chi, 1 + h chi']]``.  All coefficient fields
needed by the transformed operators are evaluated here in closed form.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import MapNotInvertible, ValidationError

__all__ = [
    "DomainSpec",
    "GridSpec",
    "BumpFunction",
    "HeightField",
    "HeightDerivatives",
    "CoeffSet",
    "HanzawaCoeffs",
    "InvertibilityReport",
    "make_bump",
    "height_derivatives",
    "hanzawa_coeffs",
    "check_invertibility",
]

LO, HI = 0, 1


@dataclass(frozen=True)
class DomainSpec:
    """Rectangle ``(0, width) x (L1, L2)`` with ``L1 < 0 < L2``."""

    width: float = 2.0
    L1: float = -1.0
    L2: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.width) and self.width > 0):
            raise ValidationError(f"domain.width must be > 0, got {self.width}")
        if not (self.L1 < 0 < self.L2):
            raise ValidationError(f"need L1 < 0 < L2, got L1={self.L1}, L2={self.L2}")

    @property
    def area(self) -> float:
        return self.width * (self.L2 - self.L1)


@dataclass(frozen=True)
class GridSpec:
    """MAC grid split into a lower slab ``(L1, 0)`` and an upper slab ``(0, L2)``.

    The interface ``y = 0`` is a horizontal face row shared by both slabs.
    Slab index 0 is the lower phase, 1 the upper phase.
    """

    domain: DomainSpec
    nx: int
    ny_lo: int
    ny_hi: int

    def __post_init__(self):
        for name in ("nx", "ny_lo", "ny_hi"):
            v = getattr(self, name)
            if int(v) != v or v < 4:
                raise ValidationError(f"grid.{name} must be an integer >= 4, got {v}")

    @property
    def dx(self) -> float:
        return self.domain.width / self.nx

    @property
    def dy_lo(self) -> float:
        return -self.domain.L1 / self.ny_lo

    @property
    def dy_hi(self) -> float:
        return self.domain.L2 / self.ny_hi

    def ny(self, s: int) -> int:
        return self.ny_lo if s == LO else self.ny_hi

    def dy(self, s: int) -> float:
        return self.dy_lo if s == LO else self.dy_hi

    @property
    def x_centers(self) -> np.ndarray:
        return (np.arange(self.nx) + 0.5) * self.dx

    @property
    def x_faces(self) -> np.ndarray:
        return np.arange(self.nx + 1) * self.dx

    def y_faces(self, s: int) -> np.ndarray:
        if s == LO:
            return self.domain.L1 + np.arange(self.ny_lo + 1) * self.dy_lo
        return np.arange(self.ny_hi + 1) * self.dy_hi

    def y_centers(self, s: int) -> np.ndarray:
        f = self.y_faces(s)
        return 0.5 * (f[1:] + f[:-1])

    def cell_volume(self, s: int) -> float:
        return self.dx * self.dy(s)

    @classmethod
    def uniform(cls, domain: DomainSpec, nx: int, ny: int | None = None) -> "GridSpec":
        """Grid with ``nx`` columns and ``ny`` rows split evenly between the slabs."""
        ny = nx if ny is None else ny
        lo = max(4, int(round(ny * (-domain.L1) / (domain.L2 - domain.L1))))
        return cls(domain, nx, lo, max(4, ny - lo))


class BumpFunction:
    """Even C^2 cut-off: 1 on ``|s| <= delta/2``, 0 on ``|s| >= delta``.

    The transition is the order-2 smoothstep ``1 - (10 t^3 - 15 t^4 + 6 t^5)``
    with ``t = (|s| - delta/2) / (delta/2)``.
    """

    #: smoothstep coefficients in t, lowest order first
    _S = np.array([0.0, 0.0, 0.0, 10.0, -15.0, 6.0])

    def __init__(self, delta: float):
        if not delta > 0:
            raise ValidationError("bump width must be positive")
        self.delta = float(delta)
        self.pieces = self._pieces()
        self.chi_prime_sup = self._sample_sup()

    def _pieces(self) -> np.ndarray:
        """Coefficients of chi on ``[delta/2, delta]`` as a polynomial in s."""
        half = 0.5 * self.delta
        # t = (s - half)/half; expand 1 - S(t) in powers of s
        t_poly = np.polynomial.Polynomial([-1.0, 1.0 / half])
        S = np.polynomial.Polynomial(self._S)
        return (1.0 - S(t_poly)).coef

    def samples(self, y: np.ndarray):
        """``(chi, chi', chi'')`` at ``y``, cached per sample array."""
        cache = self.__dict__.setdefault("_samples", {})
        key = np.asarray(y, dtype=float).tobytes()
        if key not in cache:
            if len(cache) > 64:
                cache.clear()
            cache[key] = (self(y), self.d1(y), self.d2(y))
        return cache[key]

    def _t(self, s):
        half = 0.5 * self.delta
        return np.clip((np.abs(s) - half) / half, 0.0, 1.0)

    def __call__(self, s):
        t = self._t(s)
        return 1.0 - t**3 * (10.0 - 15.0 * t + 6.0 * t * t)

    def d1(self, s):
        s = np.asarray(s, dtype=float)
        t = self._t(s)
        return -np.sign(s) * 30.0 * t * t * (1.0 - t) ** 2 * (2.0 / self.delta)

    def d2(self, s):
        s = np.asarray(s, dtype=float)
        t = self._t(s)
        inside = (t > 0.0) & (t < 1.0)
        val = -60.0 * t * (1.0 - t) * (1.0 - 2.0 * t) * (2.0 / self.delta) ** 2
        return np.where(inside, val, 0.0)

    def _sample_sup(self, n: int = 20001) -> float:
        # odd sample count puts t = 1/2, the exact maximiser, on the grid
        s = np.linspace(0.5 * self.delta, self.delta, n)
        return float(np.max(np.abs(self.d1(s))))

    @property
    def invertibility_bound(self) -> float:
        return 1.0 / (2.0 * self.chi_prime_sup)

    @property
    def default_d0(self) -> float:
        return 0.45 / self.chi_prime_sup

    def __repr__(self):
        return f"BumpFunction(delta={self.delta:.6g}, sup|chi'|={self.chi_prime_sup:.6g})"


def make_bump(domain: DomainSpec) -> BumpFunction:
    """Bump of width ``min(-L1, L2) / 3``."""
    return BumpFunction(min(-domain.L1, domain.L2) / 3.0)


@dataclass
class HeightField:
    """Interface heights at the cell-centre abscissae."""

    values: np.ndarray
    d0: float = np.inf

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise ValidationError("height samples must be one-dimensional")

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0


@dataclass
class HeightDerivatives:
    """h, h', h'' at cell centres (``c``) and at vertical faces (``f``)."""

    h_c: np.ndarray
    hp_c: np.ndarray
    hpp_c: np.ndarray
    h_f: np.ndarray
    hp_f: np.ndarray
    hpp_f: np.ndarray


def _ghosted(h: np.ndarray, dx: float, slopes=(0.0, 0.0)) -> np.ndarray:
    """Append one ghost per end so that the face slope equals ``slopes``."""
    g = np.empty(h.size + 2)
    g[1:-1] = h
    g[0] = h[0] - dx * slopes[0]
    g[-1] = h[-1] + dx * slopes[1]
    return g


def height_derivatives(h, dx: float, slopes=(0.0, 0.0)) -> HeightDerivatives:
    """Central differences with contact-angle ghost cells.

    ``slopes`` prescribes ``h'`` at ``x = 0`` and ``x = W``; zero gives the
    90 degree contact angle.
    """
    h = np.asarray(h, dtype=float)
    g = _ghosted(h, dx, slopes)
    hp_c = (g[2:] - g[:-2]) / (2.0 * dx)
    hpp_c = (g[2:] - 2.0 * g[1:-1] + g[:-2]) / dx**2
    h_f = 0.5 * (g[1:] + g[:-1])
    hp_f = (g[1:] - g[:-1]) / dx
    hpp_g = np.concatenate(([hpp_c[0]], hpp_c, [hpp_c[-1]]))
    hpp_f = 0.5 * (hpp_g[1:] + hpp_g[:-1])
    return HeightDerivatives(h, hp_c, hpp_c, h_f, hp_f, hpp_f)


@dataclass
class CoeffSet:
    """Map coefficients on one staggered location of one slab.

    With ``a = h' chi / J`` and ``b = 1 / J`` the transformed gradient is
    ``grad_h f = (f_x - a f_y, b f_y)``.
    """

    J: np.ndarray
    a: np.ndarray
    b: np.ndarray
    ax: np.ndarray
    ay: np.ndarray
    by: np.ndarray
    chi: np.ndarray
    theta3: np.ndarray

    @property
    def inv_jac(self) -> np.ndarray:
        """Entries of ``DTheta^{-T}`` stacked on the last two axes."""
        out = np.zeros(self.J.shape + (2, 2))
        out[..., 0, 0] = 1.0
        out[..., 0, 1] = -self.a
        out[..., 1, 1] = self.b
        return out


def _coeff_set(h, hp, hpp, y, chi: BumpFunction) -> CoeffSet:
    h = h[:, None]
    hp = hp[:, None]
    hpp = hpp[:, None]
    c0, c1, c2 = (c[None, :] for c in chi.samples(y))
    J = 1.0 + h * c1
    b = 1.0 / J
    a = hp * c0 * b
    ax = (hpp * c0 - a * hp * c1) * b
    ay = (hp * c1 - a * h * c2) * b
    by = -h * c2 * b * b
    return CoeffSet(J, a, b, ax, ay, by, np.broadcast_to(c0, J.shape), h * c0)


_LOCATIONS = ("cell", "u1", "u2", "node")


class HanzawaCoeffs:
    """Coefficient sets for every staggered location of both slabs.

    Locations are ``"cell"``, ``"u1"`` (vertical faces), ``"u2"`` (horizontal
    faces) and ``"node"``.  Index with ``coeffs["u1", slab]``.
    """

    def __init__(self, grid: GridSpec, chi: BumpFunction, derivs: HeightDerivatives):
        self.grid = grid
        self.chi = chi
        self.derivs = derivs
        self._sets: dict[tuple[str, int], CoeffSet] = {}

    def __getitem__(self, key) -> CoeffSet:
        # sets are built on first use
        if key not in self._sets:
            loc, s = key
            if loc not in _LOCATIONS or s not in (LO, HI):
                raise KeyError(key)
            d, grid = self.derivs, self.grid
            y = grid.y_centers(s) if loc in ("cell", "u1") else grid.y_faces(s)
            if loc in ("cell", "u2"):
                self._sets[key] = _coeff_set(d.h_c, d.hp_c, d.hpp_c, y, self.chi)
            else:
                self._sets[key] = _coeff_set(d.h_f, d.hp_f, d.hpp_f, y, self.chi)
        return self._sets[key]

    def _all(self):
        return [self[loc, s] for loc in _LOCATIONS for s in (LO, HI)]

    @property
    def J(self) -> tuple[np.ndarray, np.ndarray]:
        return self["cell", LO].J, self["cell", HI].J

    @property
    def inv_jac(self) -> tuple[np.ndarray, np.ndarray]:
        return self["cell", LO].inv_jac, self["cell", HI].inv_jac

    @property
    def theta3(self) -> tuple[np.ndarray, np.ndarray]:
        return self["cell", LO].theta3, self["cell", HI].theta3

    @property
    def min_J(self) -> float:
        # J = 1 + h chi'(y) is bilinear, so the extremes come from the ranges
        d, grid = self.derivs, self.grid
        hs = np.concatenate([d.h_c, d.h_f])
        c1 = np.concatenate(
            [self.chi.samples(y)[1] for s in (LO, HI) for y in (grid.y_centers(s), grid.y_faces(s))]
        )
        prods = np.outer([hs.min(), hs.max()], [c1.min(), c1.max()])
        return float(1.0 + prods.min())

    @property
    def is_identity(self) -> bool:
        return all(
            np.all(c.J == 1.0) and np.all(c.a == 0.0) and np.all(c.b == 1.0)
            for c in self._all()
        )


def hanzawa_coeffs(h, chi: BumpFunction, grid: GridSpec, slopes=(0.0, 0.0)) -> HanzawaCoeffs:
    """Evaluate the map coefficients for the height field ``h``.

    Raises :class:`MapNotInvertible` if the Jacobian determinant is not
    positive somewhere.
    """
    vals = h.values if isinstance(h, HeightField) else np.asarray(h, dtype=float)
    if vals.shape != (grid.nx,):
        raise ValidationError(f"height field must have {grid.nx} samples, got {vals.shape}")
    coeffs = HanzawaCoeffs(grid, chi, height_derivatives(vals, grid.dx, slopes))
    if coeffs.min_J <= 0.0:
        raise MapNotInvertible(
            f"min J = {coeffs.min_J:.3e} <= 0 (max|h| = {np.max(np.abs(vals)):.3e}, "
            f"bound {chi.invertibility_bound:.3e})"
        )
    return coeffs


@dataclass(frozen=True)
class InvertibilityReport:
    max_abs_h: float
    bound: float
    passed: bool
    margin: float
    min_J_lower_bound: float = field(default=np.nan)


def check_invertibility(h, chi: BumpFunction) -> InvertibilityReport:
    """Compare ``max|h|`` against ``1 / (2 sup|chi'|)``."""
    vals = h.values if isinstance(h, HeightField) else np.asarray(h, dtype=float)
    m = float(np.max(np.abs(vals))) if vals.size else 0.0
    bound = chi.invertibility_bound
    return InvertibilityReport(
        max_abs_h=m,
        bound=bound,
        passed=bool(m < bound),
        margin=bound - m,
        min_J_lower_bound=1.0 - m * chi.chi_prime_sup,
    )
