"""Discrete J1-J3 spin model on the lattice eps Z^2 in [0,1)^2.

Spins are stored as angles, so |u| = 1 holds exactly.  Array index
``[j1, j2]`` is the site (j1 eps, j2 eps); axis 0 runs along e1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import ConsistencyError, DegeneratePairError, ParameterError
from .field import GridSpec, VectorField2D, VorticityMeasure

TWO_PI = 2.0 * math.pi
# a neighbour pair whose angle is this close to pi is treated as antipodal
ANTIPODAL_TOL = 1e-12


@dataclass(frozen=True)
class SpinField:
    eps: float
    values: np.ndarray  # (m, m) angles

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ParameterError(f"spin values must be a square array, got shape {v.shape}")
        if not self.eps > 0:
            raise ParameterError("eps must be positive")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @classmethod
    def from_angles(cls, angles) -> "SpinField":
        a = np.asarray(angles, dtype=float)
        return cls(1.0 / a.shape[0], a)

    @classmethod
    def constant(cls, m: int, angle: float = 0.0) -> "SpinField":
        return cls(1.0 / m, np.full((m, m), float(angle)))

    def vectors(self) -> np.ndarray:
        return np.stack([np.cos(self.values), np.sin(self.values)], axis=-1)

    def rotated(self, phi: float) -> "SpinField":
        return SpinField(self.eps, self.values + phi)


@dataclass(frozen=True)
class AngleFields:
    theta_hor: np.ndarray  # (m-1, m): angle from site j to j + e1
    theta_ver: np.ndarray  # (m, m-1): angle from site j to j + e2


@dataclass(frozen=True)
class ModelParams:
    alpha: float
    eps: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 4.0:
            raise ParameterError(f"alpha must lie in (0, 4), got {self.alpha}")
        if not self.eps > 0:
            raise ParameterError("eps must be positive")

    @property
    def delta(self) -> float:
        return (4.0 - self.alpha) / 4.0

    @property
    def sigma(self) -> float:
        return self.eps / math.sqrt(2.0 * self.delta)

    @property
    def optimal_angle(self) -> float:
        return math.acos(self.alpha / 4.0)


def spin_energy(s: SpinField, alpha: float) -> float:
    """F: -alpha * nearest-neighbour sum + second-neighbour sum, free boundary."""
    if not alpha >= 0:
        raise ParameterError(f"alpha must be nonnegative, got {alpha}")
    a = s.values
    nn = np.cos(np.diff(a, axis=0)).sum() + np.cos(np.diff(a, axis=1)).sum()
    nnn = np.cos(a[2:, :] - a[:-2, :]).sum() + np.cos(a[:, 2:] - a[:, :-2]).sum()
    return float(-alpha * nn + nnn)


def triple_terms(s: SpinField, alpha: float):
    """|u(j) - (alpha/2) u(j+e) + u(j+2e)|^2 for every interior triple, per direction."""
    a = s.values
    out = []
    for ax in (0, 1):
        n = a.shape[ax]
        a0 = np.take(a, range(0, n - 2), axis=ax)
        a1 = np.take(a, range(1, n - 1), axis=ax)
        a2 = np.take(a, range(2, n), axis=ax)
        re = np.cos(a0) - 0.5 * alpha * np.cos(a1) + np.cos(a2)
        im = np.sin(a0) - 0.5 * alpha * np.sin(a1) + np.sin(a2)
        out.append(re * re + im * im)
    return out[0], out[1]


def renormalized_energy(s: SpinField, alpha: float) -> float:
    """1/2 sum of |u(j) - (alpha/2) u(j+e) + u(j+2e)|^2 over interior triples.

    This is I - min I: the constant -2 - alpha^2/4 per triple is dropped,
    and each term vanishes on the optimal spiral.
    """
    if not 0.0 < alpha <= 4.0:
        raise ParameterError(f"alpha must lie in (0, 4], got {alpha}")
    th, tv = triple_terms(s, alpha)
    return float(0.5 * (th.sum() + tv.sum()))


def spiral_angles(m: int, angle: float, chi_row: int = 1, chi_col: int = 1) -> np.ndarray:
    j1, j2 = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    return (chi_row * j1 + chi_col * j2) * angle


def build_spiral(p: ModelParams, m: int | None = None, chi_row: int = 1, chi_col: int = 1) -> SpinField:
    """Ground-state spiral turning by +-arccos(alpha/4) per step in rows and columns."""
    if chi_row not in (-1, 1) or chi_col not in (-1, 1):
        raise ParameterError("chi_row and chi_col must be +-1")
    m = m if m is not None else int(round(1.0 / p.eps))
    if m < 3:
        raise ParameterError("need at least 3 sites per direction")
    return SpinField(1.0 / m, spiral_angles(m, p.optimal_angle, chi_row, chi_col))


def _wrap(d: np.ndarray) -> np.ndarray:
    """Map to (-pi, pi]."""
    w = np.mod(d + math.pi, TWO_PI) - math.pi
    return np.where(w == -math.pi, math.pi, w)


def extract_angles(s: SpinField) -> AngleFields:
    a = s.values
    th = _wrap(a[1:, :] - a[:-1, :])
    tv = _wrap(a[:, 1:] - a[:, :-1])
    bad = []
    for name, t in (("hor", th), ("ver", tv)):
        for i, j in np.argwhere(math.pi - np.abs(t) < ANTIPODAL_TOL):
            bad.append((name, int(i), int(j)))
    if bad:
        raise DegeneratePairError(bad)
    return AngleFields(th, tv)


def plaquette_sums(a: AngleFields) -> np.ndarray:
    th, tv = a.theta_hor, a.theta_ver
    return th[:, :-1] + tv[1:, :] - th[:, 1:] - tv[:-1, :]


def detect_vortices(a: AngleFields, tol: float = 1e-9) -> list[tuple[tuple[int, int], int]]:
    """Plaquettes (lower-left site index) with discrete curl +-2 pi, and the sign."""
    c = plaquette_sums(a)
    k = np.rint(c / TWO_PI)
    off = np.abs(c - TWO_PI * k)
    if (off > tol).any() or (np.abs(k) > 1).any():
        i, j = np.unravel_index(np.argmax(np.where(np.abs(k) > 1, np.inf, off)), c.shape)
        raise ConsistencyError(f"plaquette ({i}, {j}) has circulation {c[i, j]:.6g}, not in {{-2pi, 0, 2pi}}")
    return [((int(i), int(j)), int(k[i, j])) for i, j in np.argwhere(k != 0)]


def to_continuum(s: SpinField, p: ModelParams, mass: Literal["2pi", "unit"] = "2pi"):
    """Map a spin field to (beta, sigma, vorticity measure).

    beta lives on the plaquette grid (cell size eps): beta_1 averages the two
    horizontal angles of a plaquette, beta_2 the two vertical ones, both
    divided by sqrt(2 delta).  Atom mass is 2 pi sigma (``mass="2pi"``) or
    sigma (``mass="unit"``).
    """
    if mass not in ("2pi", "unit"):
        raise ParameterError(f"mass must be '2pi' or 'unit', got {mass!r}")
    a = extract_angles(s)
    scale = 1.0 / math.sqrt(2.0 * p.delta)
    b1 = 0.5 * (a.theta_hor[:, :-1] + a.theta_hor[:, 1:]) * scale
    b2 = 0.5 * (a.theta_ver[:-1, :] + a.theta_ver[1:, :]) * scale
    n = s.m - 1
    g = GridSpec(n, n, s.eps, 0.0, 0.0)
    f = VectorField2D(g, np.stack([b1, b2], axis=-1))
    sigma = s.eps / math.sqrt(2.0 * p.delta)
    atoms = tuple(((i + 0.5) * s.eps, (j + 0.5) * s.eps, sgn) for (i, j), sgn in detect_vortices(a))
    weight = TWO_PI if mass == "2pi" else 1.0
    # neighbouring vortex plaquettes are only eps apart, so no separation check
    mu = VorticityMeasure.unchecked(sigma, s.eps, atoms, weight=weight)
    return f, sigma, mu
