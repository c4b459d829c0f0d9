"""Scaling function and explicit competitors for the upper bound.

Three competitor families are built on a grid:

* ``uniform``: beta = (1, 1 - 2 theta), no vortices;
* ``branching``: gradient of a self-similar laminate that refines towards
  x = 0 using only the four wells, plus a thin interpolation layer;
* ``vortex_array``: a row of positive vortices at distance sigma/theta from
  the left edge, spaced sigma/(2 theta) apart, mollified on scale eps.

The vortex field is periodic in y, so it is usually built on a window of
one period and its energy is assembled row-periodically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.signal import fftconvolve

from .energy import EnergyBreakdown, EnergyKind, energy, energy_periodic_rows
from .errors import GridError, ParameterError, RegimeError
from .field import (UNIT_SQUARE, GridSpec, MollifierSpec, Rect, VectorField2D,
                    VorticityMeasure, _bump_radial, curl_residual, left_boundary_trace)

SQRT2PI = math.sqrt(2.0) * math.pi


@dataclass(frozen=True)
class ScalingParams:
    sigma: float
    theta: float
    eps: float

    def __post_init__(self):
        if not (self.sigma > 0 and self.eps > 0):
            raise ParameterError(f"sigma and eps must be positive: {self}")
        if not (0.0 < self.theta <= 0.5):
            raise ParameterError(f"theta must lie in (0, 1/2], got {self.theta}")
        # equality is admitted up to rounding (the vortex-core estimate is stated with >=)
        if self.sigma < SQRT2PI * self.eps * (1 - 1e-12):
            raise ParameterError(f"need sigma > sqrt(2) pi eps: sigma={self.sigma:g}, eps={self.eps:g}")

    @property
    def period(self) -> float:
        """Vertical vortex spacing sigma / (2 theta)."""
        return self.sigma / (2.0 * self.theta)


def scaling_terms(p: ScalingParams, third: Literal["log_theta", "log_ratio"] = "log_theta"):
    s, t, e = p.sigma, p.theta, p.eps
    t1 = t * t
    t2 = s * (abs(math.log(s)) / abs(math.log(t)) + 1.0)
    if third == "log_theta":
        t3 = t * s ** 3 / e ** 2 + t * s * abs(math.log(t))
    elif third == "log_ratio":
        t3 = t * s ** 3 / e ** 2 + t * s * math.log(s / (e * t))
    else:
        raise ParameterError(f"unknown third-term variant {third!r}")
    return t1, t2, t3


def scaling_s(p: ScalingParams, third: Literal["log_theta", "log_ratio"] = "log_theta") -> float:
    return min(scaling_terms(p, third))


def regime(p: ScalingParams) -> str:
    names = ("uniform", "branching", "vortex_array")
    terms = scaling_terms(p)
    return names[int(np.argmin(terms))]


@dataclass
class Competitor:
    kind: str
    field: VectorField2D
    measure: VorticityMeasure
    params: ScalingParams
    tolerance: float
    # rows of the full unit-height field when ``field`` holds one y-period
    periodic_rows: int | None = None
    row_offset: int = 0
    info: dict = field(default_factory=dict)

    def energy(self, kind=EnergyKind.E1) -> EnergyBreakdown:
        """Energy on the unit square (the field is constant outside its window)."""
        if self.periodic_rows is not None:
            return energy_periodic_rows(kind, self.field, self.params.sigma, self.periodic_rows,
                                        row_offset=self.row_offset)
        return energy(kind, self.field, self.params.sigma)


# ---------------------------------------------------------------------------
# uniform

def build_uniform(p: ScalingParams, g: GridSpec | None = None) -> Competitor:
    g = g or GridSpec.unit(64)
    f = VectorField2D.constant(g, 1.0, 1.0 - 2.0 * p.theta)
    mu = VorticityMeasure(p.sigma, p.eps, ())
    return Competitor("uniform", f, mu, p, tolerance=1e-9)


# ---------------------------------------------------------------------------
# vortex array

def vortex_tilde(x, y, sigma: float, theta: float):
    """Unmollified building block: grad u evaluated at (x, y mod sigma/(2 theta)).

    Equals (1, 1-2 theta) for y >= x, (1, 1) for x >= P, and the interpolating
    gradient in between; its curl is sigma at every (P, kP).
    """
    P = sigma / (2.0 * theta)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    yy = y - np.floor(y / P) * P
    b1 = np.ones(x.shape)
    b2 = np.full(x.shape, 1.0 - 2.0 * theta)
    b2[x >= P] = 1.0
    mid = (yy < x) & (x < P)
    xm, ym = x[mid], yy[mid]
    d = P - ym
    b1[mid] = 1.0 + 2.0 * theta * ym / d
    b2[mid] = (1.0 - 2.0 * theta + 2.0 * theta * (xm - 2.0 * ym) / d
               + 2.0 * theta * (xm - ym) * ym / d ** 2)
    return b1, b2


def vortex_offset(p: ScalingParams) -> float:
    """Vertical shift of the array that keeps every core at least P/4 from y = 0 and y = 1.

    With cores at y_off + kP, both edges then sit at distance
    max(f, P - f)/2 from the lattice, where f = 1 mod P; P/4 >= eps always
    holds because sigma > sqrt(2) pi eps and theta <= 1/2.
    """
    P = p.period
    f = math.fmod(1.0, P)
    return 0.5 * f if f >= 0.5 * P else 0.5 * (P + f)


def vortex_atoms(p: ScalingParams, domain: Rect = UNIT_SQUARE,
                 y_off: float | None = None) -> list[tuple[float, float, int]]:
    P = p.period
    y_off = vortex_offset(p) if y_off is None else y_off
    x = p.sigma / p.theta
    kmin = math.ceil((domain.y0 + p.eps - y_off) / P - 1e-12)
    kmax = math.floor((domain.y1 - p.eps - y_off) / P + 1e-12)
    return [(x, y_off + k * P, 1) for k in range(kmin, kmax + 1)]


def vortex_period_grid(p: ScalingParams, cells_per_eps: int = 8, pad_cells: int = 4,
                       y_center: float | None = None) -> GridSpec:
    """Window [0, X] x [y_c - P/2, y_c + P/2] holding one period, with P/h integral."""
    P = p.period
    k = max(16, math.ceil(cells_per_eps * P / p.eps))
    k += k % 2
    h = P / k
    x_end = 2 * P + 1.25 * p.eps  # room for B_eps around the cores
    nx = math.ceil(x_end / h) + pad_cells
    y_center = P if y_center is None else y_center
    return GridSpec(nx, k, h, 0.0, y_center - P / 2)


def _check_vortex_params(p: ScalingParams):
    if p.theta <= p.sigma:
        raise RegimeError(f"vortex array needs theta > sigma (theta={p.theta:g}, sigma={p.sigma:g})")
    if p.sigma / p.theta + p.eps > 1.0:
        raise RegimeError(f"vortex column at x = sigma/theta = {p.sigma / p.theta:g} does not fit in the domain")


def mollified_vortex_field(p: ScalingParams, g: GridSpec, subsample: int = 3,
                          core_radius: float = 1.5, y_off: float = 0.0) -> np.ndarray:
    """(beta_tilde * rho_eps)(x - P, y - y_off) at the cell centres of ``g``.

    The convolution runs on a grid ``subsample`` times finer than ``g`` with
    normalised mollifier weights; only columns where the result is not
    constant are computed.
    """
    if subsample < 1 or subsample % 2 == 0:
        raise ParameterError("subsample must be a positive odd integer")
    P, th, e = p.period, p.theta, p.eps
    h = g.h
    xc, yc = g.xc, g.yc
    out = np.empty((g.nx, g.ny, 2))
    out[..., 0] = 1.0
    out[..., 1] = np.where(xc[:, None] < 1.5 * P, 1.0 - 2.0 * th, 1.0)
    rad = 0.25 * e
    cols = np.nonzero((xc > P - rad - h) & (xc < 2 * P + rad + h))[0]
    if cols.size == 0:
        return out
    d = h / subsample
    R = int(math.ceil(rad / d))
    off = np.arange(-R, R + 1) * d
    w = _bump_radial(np.hypot(off[:, None], off[None, :]), e)
    w /= w.sum()
    half = (subsample - 1) // 2
    i0, i1 = cols[0], cols[-1]
    fx = xc[i0] + (np.arange(-half - R, (i1 - i0) * subsample + half + R + 1)) * d
    fy = yc[0] + (np.arange(-half - R, (g.ny - 1) * subsample + half + R + 1)) * d
    # fine nodes can sit exactly on the diagonal jump y = x; sampling both sides
    # of it and averaging makes such nodes independent of rounding
    eta = 1e-6 * d
    b1, b2 = vortex_tilde(fx[:, None] - P - eta, fy[None, :] - y_off, p.sigma, th)
    c1, c2 = vortex_tilde(fx[:, None] - P + eta, fy[None, :] - y_off, p.sigma, th)
    b1 = 0.5 * (b1 + c1)
    b2 = 0.5 * (b2 + c2)
    for c, arr in enumerate((b1, b2)):
        conv = fftconvolve(arr, w, mode="valid")
        # conv[a, b] is centred at fine node (a + R, b + R); cell centres sit every `subsample` nodes
        out[i0:i1 + 1, :, c] = conv[half::subsample, half::subsample][: i1 - i0 + 1, : g.ny]
    # grid sampling is poor where the mollifier reaches the 1/r core; redo those cells
    X, Y = g.mesh()
    Ys = Y - y_off
    near = np.hypot(X - 2 * P, Ys - P * np.round(Ys / P)) < core_radius * e
    if near.any():
        pts = np.stack([X[near] - P, Ys[near]], axis=-1)
        out[near] = _polar_convolution(p, pts)
    return out


_SECTOR_EDGES = np.deg2rad([0.0, 90.0, 180.0, 225.0, 270.0, 360.0])


def _polar_convolution(p: ScalingParams, pts: np.ndarray, n_r: int = 64, n_phi: int = 24) -> np.ndarray:
    """(beta_tilde * rho_eps) at shifted points ``pts`` by polar quadrature.

    The quadrature is centred at the singular corner (P, kP) nearest to each
    point; there beta_tilde is O(1/r) and piecewise smooth in angle with
    breaks on five rays, so r * beta_tilde is integrated sector by sector.
    """
    P, e = p.period, p.eps
    tr, wr = np.polynomial.legendre.leggauss(n_r)
    tp, wp = np.polynomial.legendre.leggauss(n_phi)
    phis, wphi = [], []
    for a, b in zip(_SECTOR_EDGES[:-1], _SECTOR_EDGES[1:]):
        phis.append(a + (b - a) * 0.5 * (tp + 1.0))
        wphi.append(0.5 * (b - a) * wp)
    phi = np.concatenate(phis)
    wphi = np.concatenate(wphi)
    out = np.empty((len(pts), 2))
    for n, (x, y) in enumerate(pts):
        cx, cy = P, P * round(y / P)
        R = math.hypot(x - cx, y - cy) + 0.25 * e
        r = 0.5 * R * (tr + 1.0)
        w = 0.5 * R * wr * r
        wx = cx + r[:, None] * np.cos(phi)[None, :]
        wy = cy + r[:, None] * np.sin(phi)[None, :]
        b1, b2 = vortex_tilde(wx, wy, p.sigma, p.theta)
        k = _bump_radial(np.hypot(x - wx, y - wy), e) * w[:, None] * wphi[None, :]
        out[n] = (k * b1).sum(), (k * b2).sum()
    return out


def build_vortex_array(p: ScalingParams, g: GridSpec | None = None, subsample: int = 3,
                       tol_constant: float = 12.0) -> Competitor:
    """Mollified vortex-array competitor.

    With ``g=None`` the field is built on a one-period window (see
    :func:`vortex_period_grid`) and energies are assembled periodically.
    """
    _check_vortex_params(p)
    periodic = g is None
    if periodic:
        g0 = vortex_period_grid(p)
        # snap the shift to the grid so window rows coincide with rows of the unit square
        y_off = g0.h * round(vortex_offset(p) / g0.h)
        k_mid = int(round((0.5 - y_off) / p.period))
        g = vortex_period_grid(p, y_center=y_off + k_mid * p.period)
    else:
        y_off = vortex_offset(p)
    if g.h > p.eps / 8 * (1 + 1e-12):
        raise GridError(f"h={g.h:g} does not resolve the mollifier (need h <= eps/8 = {p.eps / 8:g})")
    values = mollified_vortex_field(p, g, subsample, y_off=y_off)
    f = VectorField2D(g, values)
    mu = VorticityMeasure(p.sigma, p.eps, tuple(vortex_atoms(p, y_off=y_off)))
    tol = tol_constant * (g.h / p.eps) * p.sigma / p.eps ** 2
    comp = Competitor("vortex_array", f, mu, p, tolerance=tol,
                      info={"period": p.period, "column_x": p.sigma / p.theta, "y_offset": y_off})
    if periodic:
        comp.periodic_rows = int(round(1.0 / g.h))
        # window row i and unit-square row j share a phase when j - i = y_off/h - ny/2 (mod ny)
        comp.row_offset = (int(round(y_off / g.h)) - g.ny // 2) % g.ny
    return comp


# ---------------------------------------------------------------------------
# branching

def laminate_profile(y, period: float, theta: float):
    """Sawtooth G with G' = +1 on a fraction 1-theta of each period and -1 on the rest."""
    y = np.asarray(y, dtype=float)
    m = np.floor(y / period)
    t = y - m * period
    top = (1.0 - theta) * period
    g = np.where(t <= top, t, 2.0 * top - t)
    return m * period * (1.0 - 2.0 * theta) + g


def _max_profile_gap(lam: float, N: int, theta: float) -> float:
    lam2 = lam / N
    pts = np.concatenate([np.arange(N + 1) * lam2, (np.arange(N) + 1.0 - theta) * lam2,
                          [(1.0 - theta) * lam]])
    return float(np.max(np.abs(laminate_profile(pts, lam, theta) - laminate_profile(pts, lam2, theta))))


@dataclass(frozen=True)
class BranchingGeometry:
    theta: float
    N: int
    periods: tuple  # lambda_0 .. lambda_K
    edges: tuple    # X_0 > X_1 > ... > X_K = layer width

    @property
    def levels(self) -> int:
        return len(self.periods) - 1


def branching_geometry(theta: float, levels: int, lambda0: float = 1.0,
                       layer_factor: float = 1.0) -> BranchingGeometry:
    N = max(2, math.ceil(1.0 / theta - 1e-12))
    lams = [lambda0 / N ** k for k in range(levels + 1)]
    widths = [_max_profile_gap(lams[k], N, theta) for k in range(levels)]
    X = [layer_factor * lams[-1]]
    for wk in reversed(widths):
        X.append(X[-1] + wk)
    return BranchingGeometry(theta, N, tuple(lams), tuple(reversed(X)))


def branching_potential(x, y, geo: BranchingGeometry):
    """Scalar potential u with grad u in K away from interfaces and the layer."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    th, X, lam = geo.theta, geo.edges, geo.periods
    K = geo.levels
    u = np.empty(x.shape)
    far = x >= X[0]
    u[far] = laminate_profile(y[far], lam[0], th) + (x[far] - X[0])
    for k in range(K):
        sel = (x >= X[k + 1]) & (x < X[k])
        xs, ys = x[sel], y[sel]
        left = laminate_profile(ys, lam[k + 1], th) - (xs - X[k + 1])
        right = laminate_profile(ys, lam[k], th) - (X[k] - xs)
        u[sel] = np.maximum(left, right)
    w = X[K]
    sel = x < w
    xs, ys = x[sel], y[sel]
    u[sel] = (xs - w) + (xs / w) * laminate_profile(ys, lam[K], th) + (1.0 - xs / w) * (1.0 - 2.0 * th) * ys
    return u


def discrete_gradient(u_nodes: np.ndarray, h: float) -> np.ndarray:
    """Cell-centred gradient of nodal values; exactly circulation-free."""
    dx = (u_nodes[1:, :] - u_nodes[:-1, :]) / h
    dy = (u_nodes[:, 1:] - u_nodes[:, :-1]) / h
    b1 = 0.5 * (dx[:, 1:] + dx[:, :-1])
    b2 = 0.5 * (dy[1:, :] + dy[:-1, :])
    return np.stack([b1, b2], axis=-1)


def auto_levels(p: ScalingParams, g: GridSpec, lambda0: float = 1.0, min_cells: float = 4.0) -> int:
    """Refine until the finest period is about sigma/theta, within grid resolution."""
    N = max(2, math.ceil(1.0 / p.theta - 1e-12))
    target = max(1, math.ceil(math.log(max(p.theta / p.sigma, 1.0 + 1e-9)) / math.log(N)))
    # lambda0 may shrink by up to a factor 2 when the geometry is fitted
    resolvable = int(math.floor(math.log(0.5 * lambda0 / (min_cells * g.h)) / math.log(N)))
    return max(1, min(target, resolvable))


def build_branching(p: ScalingParams, g: GridSpec | None = None, levels: int | None = None,
                    layer_factor: float = 1.0, lambda0: float | None = None) -> Competitor:
    g = g or GridSpec.unit(1024)
    if levels is None:
        levels = auto_levels(p, g, lambda0 or 1.0)
    if levels < 1:
        raise ParameterError("levels must be >= 1")
    geo = branching_geometry(p.theta, levels, layer_factor=layer_factor)
    if lambda0 is None:
        # keep the refined region in the left half of the domain
        lambda0 = min(1.0, 0.5 / geo.edges[0])
    geo = branching_geometry(p.theta, levels, lambda0, layer_factor)
    if geo.periods[-1] < 4 * g.h:
        raise GridError(f"{levels} levels need period {geo.periods[-1]:g} >= 4h = {4 * g.h:g}")
    if geo.edges[0] >= g.domain.x1:
        raise GridError("branching generations do not fit in the domain")
    xs = g.x0 + np.arange(g.nx + 1) * g.h
    ys = g.y0 + np.arange(g.ny + 1) * g.h
    # subtract the affine part before differencing to keep rounding at the 1e-16 level
    base_x, base_y = 1.0, 1.0 - 2.0 * p.theta
    u = branching_potential(xs[:, None], ys[None, :], geo) - (base_x * xs[:, None] + base_y * ys[None, :])
    beta = discrete_gradient(u, g.h)
    beta[..., 0] += base_x
    beta[..., 1] += base_y
    f = VectorField2D(g, beta)
    mu = VorticityMeasure(p.sigma, p.eps, ())
    return Competitor("branching", f, mu, p, tolerance=1e-10,
                      info={"levels": levels, "N": geo.N, "lambda0": lambda0, "edges": geo.edges, "periods": geo.periods})


# ---------------------------------------------------------------------------
# admissibility

@dataclass
class AdmissibilityReport:
    boundary_deviation: float
    curl_residual: float
    measure_violations: list
    regime: str
    tolerance: float
    passed: bool


def admissibility_report(c: Competitor, tol: float | None = None) -> AdmissibilityReport:
    tol = c.tolerance if tol is None else tol
    problems = c.measure.violations()
    trace = left_boundary_trace(c.field)
    dev = float(np.max(np.abs(trace - (1.0 - 2.0 * c.params.theta))))
    if problems:
        res = float("nan")
    else:
        res = curl_residual(c.field, c.measure)
    passed = (not problems) and dev <= max(tol, 1e-9) and res <= tol
    return AdmissibilityReport(dev, res, problems, regime(c.params), tol, bool(passed))
