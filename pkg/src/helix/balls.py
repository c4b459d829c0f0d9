"""Ball construction and the vortex lower-bound estimators built on it.

Balls grow like r(t) = r(0) e^t.  When closures touch, the touching cluster
is replaced by one ball whose radius is the sum of radii and whose centre
is the radius-weighted centroid.  Contacts are found exactly: a ball is
stored through a = r(t) e^{-t}, which is constant between merges, so the
pair (i, j) touches at t = ln(|p_i - p_j| / (a_i + a_j)).
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .energy import EnergyKind, disc_mask, energy, eval_W
from .errors import AdmissibilityError, GeometryError, GridError, ParameterError
from .field import Rect, VectorField2D, VorticityMeasure, curl_residual

# events closer than this (relative) are treated as simultaneous
_TIME_RTOL = 1e-12
# declared grid tolerance for admissibility, in units of (h/eps) * sigma/eps^2
CURL_TOL_CONSTANT = 12.0


@dataclass(frozen=True)
class Ball:
    center: tuple[float, float]
    radius: float
    charge: float = 0.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ParameterError(f"ball radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    def contains(self, other: "Ball", rtol: float = 1e-9) -> bool:
        d = math.dist(self.center, other.center)
        return d + other.radius <= self.radius * (1 + rtol) + 1e-300


@dataclass
class BallFamily:
    time: float
    balls: list[Ball]
    merge_log: list[tuple[float, tuple[int, ...], int]]
    initial_radius_sum: float
    # original indices covered by each current ball
    members: list[tuple[int, ...]] = field(default_factory=list)

    @property
    def total_charge(self) -> float:
        return math.fsum(b.charge for b in self.balls)

    @property
    def radius_sum(self) -> float:
        return math.fsum(b.radius for b in self.balls)


def _check_disjoint(balls):
    for i in range(len(balls)):
        for j in range(i + 1, len(balls)):
            if math.dist(balls[i].center, balls[j].center) <= balls[i].radius + balls[j].radius:
                raise GeometryError(f"initial balls {i} and {j} have intersecting closures")


class _Grower:
    def __init__(self, initial):
        self.charges = [float(b.charge) for b in initial]
        self.p: dict[int, np.ndarray] = {}
        self.a: dict[int, float] = {}
        self.members: dict[int, tuple[int, ...]] = {}
        self.heap: list = []
        self.next_id = 0
        self.log: list = []
        for b in initial:
            self._add(np.array(b.center), b.radius, (self.next_id,))

    def _add(self, p, a, members):
        k = self.next_id
        self.next_id += 1
        if self.p:
            ids = list(self.p)
            Q = np.array([self.p[j] for j in ids])
            d = np.hypot(Q[:, 0] - p[0], Q[:, 1] - p[1])
            s = a + np.array([self.a[j] for j in ids])
            with np.errstate(divide="ignore"):
                tc = np.log(d / s)
            for j, tj in zip(ids, tc.tolist()):
                heapq.heappush(self.heap, (tj, j, k))
        self.p[k], self.a[k], self.members[k] = p, a, members
        return k

    def _touching(self, t):
        ids = sorted(self.p)
        if len(ids) < 2:
            return None
        P = np.array([self.p[k] for k in ids])
        A = np.array([self.a[k] for k in ids])
        D = np.hypot(P[:, None, 0] - P[None, :, 0], P[:, None, 1] - P[None, :, 1])
        hit = np.triu(D <= (A[:, None] + A[None, :]) * (math.exp(t) * (1 + _TIME_RTOL)), 1)
        if not hit.any():
            return None
        x, y = np.argwhere(hit)[0]
        return ids[x], ids[y]

    def run(self, T: float):
        while self.heap:
            t, i, j = self.heap[0]
            if i not in self.p or j not in self.p:
                heapq.heappop(self.heap)
                continue
            t = max(t, self.log[-1][0] if self.log else 0.0)
            if t > T:
                break
            start = self.next_id
            parents: dict[int, tuple[int, ...]] = {}
            pair = self._touching(t)
            # cascade: merge overlapping pairs one at a time until disjoint
            while pair is not None:
                i, j = pair
                ai, aj = self.a.pop(i), self.a.pop(j)
                pi, pj = self.p.pop(i), self.p.pop(j)
                mem = tuple(sorted(self.members.pop(i) + self.members.pop(j)))
                k = self._add((ai * pi + aj * pj) / (ai + aj), ai + aj, mem)
                parents[k] = tuple(sorted(
                    parents.pop(i, (i,)) + parents.pop(j, (j,))))
                pair = self._touching(t)
            for k in sorted(parents):
                self.log.append((t, parents[k], k))
            assert all(k >= start for k in parents)
        return self


def _grow(initial, t):
    _check_disjoint(initial)
    return _Grower(initial).run(t)


def grow_balls(initial: list[Ball], t: float) -> BallFamily:
    """Family at time ``t``; merges at times <= t have been applied."""
    if t < 0:
        raise ParameterError(f"t must be nonnegative, got {t}")
    initial = list(initial)
    g = _grow(initial, t)
    balls, members = [], []
    s = math.exp(t)
    for k in sorted(g.p):
        mem = g.members[k]
        balls.append(Ball(tuple(g.p[k]), g.a[k] * s, math.fsum(g.charges[m] for m in mem)))
        members.append(mem)
    return BallFamily(t, balls, list(g.log), math.fsum(b.radius for b in initial), members)


def merge_times(initial: list[Ball], T: float) -> list[float]:
    """Distinct event times up to T; simultaneous cluster merges count once."""
    out: list[float] = []
    for t, _, _ in grow_balls(initial, T).merge_log:
        if not out or t > out[-1]:
            out.append(t)
    return out


def annulus_bound(charge: float, sigma: float, r: float, R: float, c: float) -> float:
    """c * sigma * |charge| * ln(R/r)."""
    if not 0 < r < R:
        raise ParameterError(f"need 0 < r < R, got r={r}, R={R}")
    if not c > 0 or not sigma > 0:
        raise ParameterError("c and sigma must be positive")
    return c * sigma * abs(charge) * math.log(R / r)


def curl_tolerance(f: VectorField2D, mu: VorticityMeasure) -> float:
    if not mu.atoms:
        return 1e-9
    return CURL_TOL_CONSTANT * (f.spec.h / mu.eps) * mu.sigma / mu.eps ** 2


def require_admissible(f: VectorField2D, mu: VorticityMeasure, tol: float | None = None) -> float:
    tol = curl_tolerance(f, mu) if tol is None else tol
    res = curl_residual(f, mu)
    if not res <= tol:
        raise AdmissibilityError(f"curl residual {res:.3g} exceeds tolerance {tol:.3g}")
    return res


def vortex_core_ratio(f: VectorField2D, mu: VorticityMeasure, tol: float | None = None) -> list[float]:
    """Per atom: integral of W over B_eps(x_i), divided by sigma^4/eps^2.

    Atoms whose eps-ball is not inside the grid raise GridError; restrict
    the measure first when ``f`` covers only part of the domain.
    """
    require_admissible(f, mu, tol)
    dom = f.spec.domain
    if f.spec.h > mu.eps / 8 * (1 + 1e-12):
        raise GridError(f"h={f.spec.h:g} does not resolve B_eps (need h <= eps/8)")
    Wv = eval_W(f.values)
    scale = mu.sigma ** 4 / mu.eps ** 2
    out = []
    for x, y, _ in mu.atoms:
        if not dom.contains_rect(Rect(x - mu.eps, x + mu.eps, y - mu.eps, y + mu.eps), tol=1e-12):
            raise GridError(f"B_eps around atom ({x:g}, {y:g}) leaves the grid")
        m = disc_mask(f, (x, y), mu.eps)
        out.append(float(f.spec.h ** 2 * Wv[m].sum() / scale))
    return out


def restrict_measure(mu: VorticityMeasure, rect: Rect) -> VorticityMeasure:
    """Atoms whose eps-ball lies in ``rect``."""
    e = mu.eps
    keep = [a for a in mu.atoms
            if rect.contains_rect(Rect(a[0] - e, a[0] + e, a[1] - e, a[1] + e), tol=1e-12)]
    return VorticityMeasure(mu.sigma, mu.eps, tuple(keep), mu.weight, mu.domain)


@dataclass
class LowerBoundReport:
    T: float
    enclosed_charge: float
    bound: float
    measured_energy: float
    ratio: float | None
    n_atoms: int
    family: BallFamily | None = None


def _inner_distance(inner: Rect, outer: Rect) -> float:
    if not outer.contains_rect(inner):
        raise GeometryError("inner rectangle must lie inside the outer one")
    return min(inner.x0 - outer.x0, outer.x1 - inner.x1, inner.y0 - outer.y0, outer.y1 - inner.y1)


def _ball_meets_rect(b: Ball, r: Rect) -> bool:
    cx = min(max(b.center[0], r.x0), r.x1)
    cy = min(max(b.center[1], r.y0), r.y1)
    return math.hypot(b.center[0] - cx, b.center[1] - cy) < b.radius


def vortex_lower_bound(f: VectorField2D, mu: VorticityMeasure, inner: Rect, outer: Rect,
                       c_bc: float) -> LowerBoundReport:
    """Logarithmic lower bound from growing the atoms' eps-balls up to the largest allowed T."""
    if not c_bc > 0:
        raise ParameterError("c_bc must be positive")
    d = _inner_distance(inner, outer)
    if d <= 0:
        raise GeometryError("inner and outer rectangles must be a positive distance apart")
    measured = energy(EnergyKind.E1, f, mu.sigma, outer).total
    n = len(mu.atoms)
    if n == 0:
        return LowerBoundReport(0.0, 0.0, 0.0, measured, None, 0)
    T = math.log(d / (2.0 * mu.eps * n))
    if T <= 0:
        raise GeometryError(f"{n} vortices too crowded: eps n = {mu.eps * n:g} exceeds d/2 = {d / 2:g}")
    initial = [Ball((x, y), mu.eps, g * mu.atom_mass) for x, y, g in mu.atoms]
    fam = grow_balls(initial, T)
    charge = math.fsum(b.charge for b in fam.balls if _ball_meets_rect(b, inner))
    bound = c_bc * mu.sigma * T * abs(charge)
    ratio = measured / bound if bound > 0 else None
    return LowerBoundReport(T, charge, bound, measured, ratio, n, fam)
