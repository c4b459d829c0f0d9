"""Grids, sampled vector fields, the mollifier and vorticity measures.

Array convention: ``values[i, j]`` is the sample at the centre of cell ``i``
along x and ``j`` along y, i.e. axis 0 is x.  A "dual cell" ``(i, j)`` is the
square whose corners are the four cell centres ``(i, j) .. (i+1, j+1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.spatial import cKDTree

from .errors import GridError, MeasureError, ParameterError

# Normalisation of the unscaled bump exp(-1/(1 - |4x|^2)) over B_{1/4}(0).
# Frozen from a 2-D adaptive quadrature; tests/test_field.py recomputes it.
BUMP_MASS = 0.029157024573645628

_GL_NODES, _GL_WEIGHTS = leggauss(64)
_GL_T = 0.5 * (_GL_NODES + 1.0)
_GL_W = 0.5 * _GL_WEIGHTS


@dataclass(frozen=True)
class Rect:
    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if self.x1 < self.x0 or self.y1 < self.y0:
            raise ParameterError(f"malformed rectangle {self}")

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def contains_rect(self, other: "Rect", tol: float = 1e-12) -> bool:
        return (other.x0 >= self.x0 - tol and other.x1 <= self.x1 + tol
                and other.y0 >= self.y0 - tol and other.y1 <= self.y1 + tol)

    def inflate(self, d: float) -> "Rect":
        return Rect(self.x0 - d, self.x1 + d, self.y0 - d, self.y1 + d)


UNIT_SQUARE = Rect(0.0, 1.0, 0.0, 1.0)


@dataclass(frozen=True)
class GridSpec:
    """Uniform cell-centred grid with square cells of side ``h``.

    ``GridSpec.unit(n)`` is the n x n grid on (0,1)^2; ``GridSpec.window``
    covers an arbitrary axis-aligned rectangle with a prescribed spacing.
    """

    nx: int
    ny: int
    h: float
    x0: float = 0.0
    y0: float = 0.0

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise GridError("cell counts must be integers")
        if self.nx < 2 or self.ny < 2:
            raise GridError(f"need at least 2 cells per side, got {self.nx}x{self.ny}")
        if not (self.h > 0 and math.isfinite(self.h)):
            raise GridError(f"invalid spacing h={self.h}")

    @classmethod
    def unit(cls, n: int) -> "GridSpec":
        return cls(n, n, 1.0 / n)

    @classmethod
    def window(cls, rect: Rect, h: float) -> "GridSpec":
        """Grid of spacing ``h`` anchored at the lower-left corner of ``rect``.

        The upper edges are rounded to the nearest multiple of ``h``.
        """
        nx = max(2, int(round((rect.x1 - rect.x0) / h)))
        ny = max(2, int(round((rect.y1 - rect.y0) / h)))
        return cls(nx, ny, h, rect.x0, rect.y0)

    @property
    def n(self) -> int:
        if self.nx != self.ny:
            raise GridError("n is only defined for square grids")
        return self.nx

    @property
    def domain(self) -> Rect:
        return Rect(self.x0, self.x0 + self.nx * self.h, self.y0, self.y0 + self.ny * self.h)

    @property
    def xc(self) -> np.ndarray:
        return self.x0 + (np.arange(self.nx) + 0.5) * self.h

    @property
    def yc(self) -> np.ndarray:
        return self.y0 + (np.arange(self.ny) + 0.5) * self.h

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.xc, self.yc, indexing="ij")

    def cell_mask(self, rect: Rect | None) -> np.ndarray:
        """Cells whose centres lie in the closed rectangle."""
        if rect is None:
            return np.ones((self.nx, self.ny), dtype=bool)
        mx = (self.xc >= rect.x0) & (self.xc <= rect.x1)
        my = (self.yc >= rect.y0) & (self.yc <= rect.y1)
        return mx[:, None] & my[None, :]


@dataclass(frozen=True, eq=False)
class VectorField2D:
    """A field beta = (beta_1, beta_2) sampled at cell centres."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.spec.nx, self.spec.ny, 2):
            raise GridError(f"values shape {v.shape} does not match grid {(self.spec.nx, self.spec.ny, 2)}")
        if not np.all(np.isfinite(v)):
            raise ParameterError("field contains non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, spec: GridSpec, fn: Callable) -> "VectorField2D":
        X, Y = spec.mesh()
        b1, b2 = fn(X, Y)
        return cls(spec, np.stack(np.broadcast_arrays(b1, b2), axis=-1))

    @classmethod
    def constant(cls, spec: GridSpec, b1: float, b2: float) -> "VectorField2D":
        v = np.empty((spec.nx, spec.ny, 2))
        v[..., 0] = b1
        v[..., 1] = b2
        return cls(spec, v)

    @property
    def b1(self) -> np.ndarray:
        return self.values[..., 0]

    @property
    def b2(self) -> np.ndarray:
        return self.values[..., 1]


# ---------------------------------------------------------------------------
# mollifier

@dataclass(frozen=True)
class MollifierSpec:
    """rho_eps(x) = eps^-2 Z^-1 exp(-1/(1-|4x/eps|^2)) on B_{eps/4}."""

    eps: float
    Z: float = BUMP_MASS

    def __post_init__(self):
        if not self.eps > 0:
            raise ParameterError(f"eps must be positive, got {self.eps}")

    @property
    def radius(self) -> float:
        return 0.25 * self.eps


def _bump_radial(r, eps, Z=BUMP_MASS):
    s = (4.0 * np.asarray(r, dtype=float) / eps) ** 2
    out = np.zeros_like(s)
    inside = s < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s[inside])) / (Z * eps * eps)
    return out


def mollifier_value(m: MollifierSpec, x) -> np.ndarray | float:
    """Evaluate rho_eps at point(s) ``x`` (last axis of length 2)."""
    x = np.asarray(x, dtype=float)
    r = np.hypot(x[..., 0], x[..., 1])
    val = _bump_radial(r, m.eps, m.Z)
    return float(val) if val.ndim == 0 else val


def mollifier_mass_within(m: MollifierSpec, r) -> np.ndarray:
    """Mass of rho_eps inside the disc of radius ``r`` (vectorised)."""
    r = np.minimum(np.asarray(r, dtype=float), m.radius)
    s = r[..., None] * _GL_T
    inner = (_GL_T * _bump_radial(s, m.eps, m.Z)) @ _GL_W
    return 2.0 * np.pi * r * r * inner


def bump_normalization() -> float:
    """Recompute the bump mass by 1-D radial quadrature (reference value)."""
    from scipy import integrate

    val, _ = integrate.quad(lambda r: 2.0 * np.pi * r * np.exp(-1.0 / (1.0 - 16.0 * r * r)),
                            0.0, 0.25, epsabs=1e-15, epsrel=1e-14)
    return val


# ---------------------------------------------------------------------------
# vorticity measures

@dataclass(frozen=True)
class VorticityMeasure:
    """sigma * weight * sum_i gamma_i delta_{x_i} * rho_eps.

    ``weight`` is 1 for the continuum classes and 2*pi for the convention
    inherited from the lattice model.  Containment of B_eps(x_i) in
    ``domain`` and pairwise disjointness are checked on construction.
    """

    sigma: float
    eps: float
    atoms: tuple = ()
    weight: float = 1.0
    domain: Rect = UNIT_SQUARE
    validate: bool = field(default=True, compare=False)

    def __post_init__(self):
        if not self.sigma > 0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}")
        if not self.eps > 0:
            raise ParameterError(f"eps must be positive, got {self.eps}")
        atoms = tuple((float(a[0]), float(a[1]), int(a[2])) for a in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        if self.validate:
            problems = self.violations()
            if problems:
                raise MeasureError(problems[0])

    @classmethod
    def unchecked(cls, sigma, eps, atoms, **kw) -> "VorticityMeasure":
        """Build without validation; use :meth:`violations` to inspect."""
        return cls(sigma, eps, atoms, validate=False, **kw)

    def violations(self) -> list[str]:
        out = []
        tol = 1e-12 * max(1.0, self.eps)
        d = self.domain
        for k, (x, y, g) in enumerate(self.atoms):
            if g not in (-1, 1):
                out.append(f"atom {k}: sign must be +-1, got {g}")
            if (x - self.eps < d.x0 - tol or x + self.eps > d.x1 + tol
                    or y - self.eps < d.y0 - tol or y + self.eps > d.y1 + tol):
                out.append(f"atom {k} at ({x:g}, {y:g}): B_eps not contained in the domain")
        if len(self.atoms) > 1:
            p = self.centers
            for i, j in sorted(cKDTree(p).query_pairs(2.0 * self.eps - tol)):
                dist = float(np.hypot(*(p[i] - p[j])))
                if dist < 2.0 * self.eps - tol:
                    out.append(f"atoms {i} and {j}: eps-balls intersect "
                               f"(distance {dist:g} < 2 eps = {2 * self.eps:g})")
        return out

    @property
    def centers(self) -> np.ndarray:
        return np.array([[a[0], a[1]] for a in self.atoms], dtype=float).reshape(-1, 2)

    @property
    def signs(self) -> np.ndarray:
        return np.array([a[2] for a in self.atoms], dtype=int)

    @property
    def mollifier(self) -> MollifierSpec:
        return MollifierSpec(self.eps)

    @property
    def atom_mass(self) -> float:
        return self.sigma * self.weight

    @property
    def total_mass(self) -> float:
        return self.atom_mass * int(self.signs.sum()) if self.atoms else 0.0

    def __len__(self):
        return len(self.atoms)

    def density(self, X, Y) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        out = np.zeros(np.broadcast(X, Y).shape)
        for x, y, g in self.atoms:
            out += g * _bump_radial(np.hypot(X - x, Y - y), self.eps)
        return self.atom_mass * out


# ---------------------------------------------------------------------------
# circulation and admissibility

def circulations(f: VectorField2D) -> np.ndarray:
    """Circulation of ``f`` around every dual cell, shape (nx-1, ny-1).

    Each edge integral is the trapezoid rule on the two cell centres it
    joins, so sums over unions of dual cells telescope exactly.
    """
    b1, b2, h = f.b1, f.b2, f.spec.h
    bottom = b1[:-1, :-1] + b1[1:, :-1]
    top = b1[:-1, 1:] + b1[1:, 1:]
    right = b2[1:, :-1] + b2[1:, 1:]
    left = b2[:-1, :-1] + b2[:-1, 1:]
    return 0.5 * h * ((bottom - top) + (right - left))


def cell_circulation(f: VectorField2D, i: int, j: int) -> float:
    nx, ny = f.spec.nx, f.spec.ny
    if not (0 <= i < nx - 1 and 0 <= j < ny - 1):
        raise GridError(f"dual cell ({i}, {j}) outside 0..{nx - 2} x 0..{ny - 2}")
    b1, b2, h = f.b1, f.b2, f.spec.h
    return 0.5 * h * ((b1[i, j] + b1[i + 1, j]) + (b2[i + 1, j] + b2[i + 1, j + 1])
                      - (b1[i, j + 1] + b1[i + 1, j + 1]) - (b2[i, j] + b2[i, j + 1]))


def loop_circulation(f: VectorField2D, i0: int, i1: int, j0: int, j1: int) -> float:
    """Circulation along the boundary of the union of dual cells i0<=i<i1, j0<=j<j1."""
    b1, b2, h = f.b1, f.b2, f.spec.h

    def trap(v):
        return h * (v.sum() - 0.5 * (v[0] + v[-1]))

    return (trap(b1[i0:i1 + 1, j0]) + trap(b2[i1, j0:j1 + 1])
            - trap(b1[i0:i1 + 1, j1]) - trap(b2[i0, j0:j1 + 1]))


def dual_cell_masses(spec: GridSpec, mu: VorticityMeasure, order: int = 6) -> np.ndarray:
    """Integral of the mollified measure over each dual cell (Gauss-Legendre)."""
    out = np.zeros((spec.nx - 1, spec.ny - 1))
    if not mu.atoms:
        return out
    t, w = leggauss(order)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    h = spec.h
    xc, yc = spec.xc, spec.yc
    rad = mu.mollifier.radius
    for x, y, g in mu.atoms:
        i0 = max(0, int(np.floor((x - rad - xc[0]) / h)) - 1)
        i1 = min(spec.nx - 1, int(np.ceil((x + rad - xc[0]) / h)) + 1)
        j0 = max(0, int(np.floor((y - rad - yc[0]) / h)) - 1)
        j1 = min(spec.ny - 1, int(np.ceil((y + rad - yc[0]) / h)) + 1)
        if i1 <= i0 or j1 <= j0:
            continue
        qx = xc[i0:i1, None] + h * t[None, :]
        qy = yc[j0:j1, None] + h * t[None, :]
        r = np.hypot(qx[:, None, :, None] - x, qy[None, :, None, :] - y)
        vals = _bump_radial(r, mu.eps)
        out[i0:i1, j0:j1] += g * h * h * np.einsum("abkl,k,l->ab", vals, w, w)
    return mu.atom_mass * out


def curl_residual(f: VectorField2D, mu: VorticityMeasure | None = None) -> float:
    """max over dual cells of |circulation - mu(cell)| / h^2."""
    circ = circulations(f)
    if mu is not None and mu.atoms:
        if f.spec.h > mu.eps / 8 * (1 + 1e-12):
            raise GridError(f"h={f.spec.h:g} does not resolve the mollifier (need h <= eps/8 = {mu.eps / 8:g})")
        circ = circ - dual_cell_masses(f.spec, mu)
    return float(np.max(np.abs(circ))) / f.spec.h ** 2


def left_boundary_trace(f: VectorField2D) -> np.ndarray:
    """beta_2 at x = x0 by linear extrapolation from the first two columns."""
    return 1.5 * f.b2[0] - 0.5 * f.b2[1]


# ---------------------------------------------------------------------------
# reference fields and identities

def canonical_vortex_field(spec: GridSpec, center: Sequence[float], sigma: float,
                           eps: float | None = None, base: Sequence[float] = (0.0, 0.0),
                           gamma: int = 1) -> VectorField2D:
    """sigma/(2 pi) (x-c)^perp/|x-c|^2, optionally smeared so curl = sigma rho_eps.

    For a radial mollifier the smeared field is the point field multiplied
    by the mollifier mass inside |x - c| (Newton's theorem).
    """
    X, Y = spec.mesh()
    dx, dy = X - center[0], Y - center[1]
    r2 = dx * dx + dy * dy
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.where(r2 > 0, gamma * sigma / (2 * np.pi * r2), 0.0)
    if eps is not None:
        k = k * mollifier_mass_within(MollifierSpec(eps), np.sqrt(r2))
    return VectorField2D(spec, np.stack([base[0] - k * dy, base[1] + k * dx], axis=-1))


def rewrite_identity(f: VectorField2D, curl: Callable, theta: float, x: float,
                     y1: float, y2: float) -> tuple[float, float]:
    """Both sides of

        int_{y1}^{y2} beta_2(x,t) dt - (1-2 theta)(y2-y1)
            = int_0^x beta_1(s,y2) - beta_1(s,y1) ds + int_{(0,x)x(y1,y2)} curl beta

    evaluated on the grid.  ``x, y1, y2`` are snapped to cell faces; ``curl``
    is a callable density evaluated at cell centres.
    """
    s = f.spec
    k = int(round((x - s.x0) / s.h))
    j1 = int(round((y1 - s.y0) / s.h))
    j2 = int(round((y2 - s.y0) / s.h))
    if not (1 <= k <= s.nx - 1 and 1 <= j1 < j2 <= s.ny - 1):
        raise GridError("rewrite identity needs interior face indices")
    h = s.h
    b2_line = 0.5 * (f.b2[k - 1, j1:j2] + f.b2[k, j1:j2])
    lhs = h * b2_line.sum() - (1 - 2 * theta) * (j2 - j1) * h
    b1_top = 0.5 * (f.b1[:k, j2 - 1] + f.b1[:k, j2])
    b1_bot = 0.5 * (f.b1[:k, j1 - 1] + f.b1[:k, j1])
    X, Y = np.meshgrid(s.xc[:k], s.yc[j1:j2], indexing="ij")
    rhs = h * (b1_top - b1_bot).sum() + h * h * np.asarray(curl(X, Y)).sum()
    return float(lhs), float(rhs)


def point_in_rects(points: np.ndarray, rects: Iterable[Rect]) -> np.ndarray:
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    hit = np.zeros(len(points), dtype=bool)
    for r in rects:
        hit |= ((points[:, 0] >= r.x0) & (points[:, 0] <= r.x1)
                & (points[:, 1] >= r.y0) & (points[:, 1] <= r.y1))
    return hit
