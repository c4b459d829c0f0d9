"""Multi-well potential, the primitive Phi, and the discretised energies.

Three energies share the bulk term int W(beta):

* ``E1``: sigma |D beta|, discretised edge-wise as sum_e h |jump of beta across e|
* ``E2``: sigma^2 |D beta|^2 with all four forward differences
* ``EA``: sigma^2 ((d1 beta1)^2 + (d2 beta2)^2)

A "region" restricts to cells whose centres lie inside it; an edge counts
when both of its cells do.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .field import GridSpec, Rect, VectorField2D

K_WELLS = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])


class EnergyKind(str, enum.Enum):
    E1 = "E1"
    E2 = "E2"
    EA = "EA"


@dataclass(frozen=True)
class EnergyBreakdown:
    bulk: float
    regularizer: float
    total: float
    region: Rect | None = None

    @classmethod
    def of(cls, bulk, reg, region=None):
        bulk, reg = float(bulk), float(reg)
        return cls(bulk, reg, bulk + reg, region)


def eval_W(b) -> np.ndarray | float:
    b = np.asarray(b, dtype=float)
    val = (1.0 - b[..., 0] ** 2) ** 2 + (1.0 - b[..., 1] ** 2) ** 2
    return float(val) if val.ndim == 0 else val


def dist_to_K(b) -> np.ndarray | float:
    b = np.asarray(b, dtype=float)
    d1 = np.abs(np.abs(b[..., 0]) - 1.0)
    d2 = np.abs(np.abs(b[..., 1]) - 1.0)
    val = np.hypot(d1, d2)
    return float(val) if val.ndim == 0 else val


def eval_Phi(t) -> np.ndarray | float:
    """Odd antiderivative of |1 - t^2| with Phi(0) = 0."""
    t = np.asarray(t, dtype=float)
    a = np.abs(t)
    val = np.where(a <= 1.0, t - t ** 3 / 3.0, np.sign(t) * (a ** 3 / 3.0 - a + 4.0 / 3.0))
    return float(val) if val.ndim == 0 else val


def _as_kind(kind) -> EnergyKind:
    try:
        return EnergyKind(kind.value if isinstance(kind, EnergyKind) else str(kind).upper())
    except ValueError:
        raise ParameterError(f"unknown energy kind {kind!r}") from None


def _edge_terms(kind: EnergyKind, f: VectorField2D, sigma: float):
    """Per-edge regulariser contributions: (x-edges (nx-1,ny), y-edges (nx,ny-1))."""
    v, h = f.values, f.spec.h
    dx = v[1:, :, :] - v[:-1, :, :]
    dy = v[:, 1:, :] - v[:, :-1, :]
    if kind is EnergyKind.E1:
        return sigma * h * np.hypot(dx[..., 0], dx[..., 1]), sigma * h * np.hypot(dy[..., 0], dy[..., 1])
    if kind is EnergyKind.E2:
        return sigma ** 2 * (dx ** 2).sum(-1), sigma ** 2 * (dy ** 2).sum(-1)
    return sigma ** 2 * dx[..., 0] ** 2, sigma ** 2 * dy[..., 1] ** 2


def energy_on_mask(kind, f: VectorField2D, sigma: float, mask: np.ndarray,
                   region: Rect | None = None) -> EnergyBreakdown:
    kind = _as_kind(kind)
    if not sigma > 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return EnergyBreakdown.of(0.0, 0.0, region)
    h = f.spec.h
    bulk = h * h * eval_W(f.values)[mask].sum()
    ex, ey = _edge_terms(kind, f, sigma)
    reg = ex[mask[1:, :] & mask[:-1, :]].sum() + ey[mask[:, 1:] & mask[:, :-1]].sum()
    return EnergyBreakdown.of(bulk, reg, region)


def energy(kind, f: VectorField2D, sigma: float, region: Rect | None = None) -> EnergyBreakdown:
    """Discrete energy of ``f`` on ``region`` (whole grid when None)."""
    if not sigma > 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    if region is not None:
        if not f.spec.domain.contains_rect(region, tol=1e-9):
            raise ParameterError(f"region {region} not inside grid domain {f.spec.domain}")
        if region.area <= 0:
            return EnergyBreakdown.of(0.0, 0.0, region)
    if region is None:
        ex, ey = _edge_terms(_as_kind(kind), f, sigma)
        return EnergyBreakdown.of(f.spec.h ** 2 * eval_W(f.values).sum(), ex.sum() + ey.sum())
    return energy_on_mask(kind, f, sigma, f.spec.cell_mask(region), region)


def slice_energy(kind, f: VectorField2D, sigma: float, axis: str, index: float,
                 interval: tuple[float, float]) -> float:
    """Energy on the grid line nearest to ``index``, restricted to ``interval``.

    ``axis='horizontal'`` is the line y = index (variation along x);
    ``axis='vertical'`` is the line x = index (variation along y).  The
    variation is taken along the slice itself.
    """
    kind = _as_kind(kind)
    if not sigma > 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    lo, hi = interval
    if hi <= lo:
        return 0.0
    s = f.spec
    if axis == "horizontal":
        j = int(np.clip(np.rint((index - s.y0) / s.h - 0.5), 0, s.ny - 1))
        line, coords, comp = f.values[:, j, :], s.xc, 0
    elif axis == "vertical":
        i = int(np.clip(np.rint((index - s.x0) / s.h - 0.5), 0, s.nx - 1))
        line, coords, comp = f.values[i, :, :], s.yc, 1
    else:
        raise ParameterError(f"axis must be 'horizontal' or 'vertical', got {axis!r}")
    sel = (coords >= lo) & (coords <= hi)
    if not sel.any():
        return 0.0
    seg = line[sel]
    bulk = s.h * eval_W(seg).sum()
    d = np.diff(seg, axis=0)
    if kind is EnergyKind.E1:
        reg = sigma * np.hypot(d[:, 0], d[:, 1]).sum()
    elif kind is EnergyKind.E2:
        reg = sigma ** 2 * (d ** 2).sum() / s.h
    else:
        reg = sigma ** 2 * (d[:, comp] ** 2).sum() / s.h
    return float(bulk + reg)


def energy_periodic_rows(kind, f: VectorField2D, sigma: float, n_rows: int,
                         row_offset: int = 0) -> EnergyBreakdown:
    """Energy of a y-periodic field over ``n_rows`` rows, given one period.

    ``f`` holds exactly one period (``f.spec.ny`` rows); row ``j`` of the
    full field equals row ``(j - row_offset) mod ny`` of ``f`` and vertical
    edges wrap around the period.
    """
    kind = _as_kind(kind)
    if not sigma > 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    k = f.spec.ny
    h = f.spec.h
    row_bulk = h * h * eval_W(f.values).sum(axis=0)
    ex, _ = _edge_terms(kind, f, sigma)
    row_x = ex.sum(axis=0)
    wrapped = np.concatenate([f.values, f.values[:, :1, :]], axis=1)
    _, ey = _edge_terms(kind, VectorField2D(GridSpec(f.spec.nx, k + 1, h, f.spec.x0, f.spec.y0), wrapped), sigma)
    row_y = ey.sum(axis=0)
    c = np.bincount((np.arange(n_rows) - row_offset) % k, minlength=k)
    c2 = np.bincount((np.arange(max(n_rows - 1, 0)) - row_offset) % k, minlength=k)
    bulk = float(c @ row_bulk)
    reg = float(c @ row_x + c2 @ row_y)
    return EnergyBreakdown.of(bulk, reg)


def annulus_masks(f: VectorField2D, center, r_in: float, r_out: float):
    X, Y = f.spec.mesh()
    r = np.hypot(X - center[0], Y - center[1])
    return (r > r_in) & (r < r_out)


def disc_mask(f: VectorField2D, center, radius: float) -> np.ndarray:
    X, Y = f.spec.mesh()
    return np.hypot(X - center[0], Y - center[1]) < radius


def total_variation_on_mask(f: VectorField2D, mask: np.ndarray) -> float:
    """Edge-wise |D beta| over edges whose two cells lie in ``mask``."""
    return energy_on_mask(EnergyKind.E1, f, 1.0, mask).regularizer
