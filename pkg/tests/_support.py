"""Helpers shared by the unit and acceptance tests."""
import math

import numpy as np

from helix.balls import Ball, grow_balls


def random_family(rng, max_balls=50, box=10.0):
    n = int(rng.integers(1, max_balls + 1))
    out = []
    while len(out) < n:
        c = rng.uniform(0, box, 2)
        r = float(rng.uniform(0.01, 0.3))
        if all(math.dist(c, b.center) > r + b.radius for b in out):
            out.append(Ball(tuple(c), r, float(rng.choice([-1.0, 1.0]))))
    return out


def _inside(inner_c, inner_r, outer, rtol):
    d = math.dist(inner_c, outer.center)
    return d + inner_r <= outer.radius * (1 + rtol)


def check_ball_properties(initial, T, rtol=1e-9, n_sub=4):
    """Assert properties (1)-(4) of the construction plus disjointness and charge; return the family."""
    fam = grow_balls(initial, T)
    # disjoint closures
    for i, a in enumerate(fam.balls):
        for b in fam.balls[i + 1:]:
            assert math.dist(a.center, b.center) > (a.radius + b.radius) * (1 - rtol)
    # (1) radius sum
    assert fam.radius_sum <= math.exp(T) * fam.initial_radius_sum * (1 + rtol)
    # (2) every initial ball inside a current one
    for b in initial:
        assert any(_inside(b.center, b.radius, c, rtol) for c in fam.balls)
    # (3) balls at intermediate times, grown to T, sit in exactly one ball at T
    for s in np.linspace(0, T, n_sub, endpoint=False)[1:]:
        for b in grow_balls(initial, float(s)).balls:
            hits = [c for c in fam.balls if _inside(b.center, b.radius * math.exp(T - s), c, rtol)]
            assert len(hits) == 1
    # (4) finitely many strictly increasing merge times; pure exponential growth in between
    times = [t for t, _, _ in fam.merge_log]
    distinct = sorted(set(times))
    assert len(distinct) <= len(initial)
    assert all(b > a for a, b in zip(distinct, distinct[1:]))
    edges = [0.0] + distinct + [T]
    for lo, hi in zip(edges, edges[1:]):
        if hi - lo < 1e-6:
            continue
        a, b = lo + 0.25 * (hi - lo), lo + 0.75 * (hi - lo)
        fa, fb = grow_balls(initial, a), grow_balls(initial, b)
        assert len(fa.balls) == len(fb.balls)
        for x, y in zip(fa.balls, fb.balls):
            assert x.center == y.center
            assert y.radius == _approx(x.radius * math.exp(b - a), rtol)
    # charge is conserved exactly (charges are +-1, so sums are exact in floating point)
    assert fam.total_charge == sum(b.charge for b in initial)
    return fam


class _approx:
    def __init__(self, v, rtol):
        self.v, self.rtol = v, rtol

    def __eq__(self, other):
        return abs(other - self.v) <= self.rtol * abs(self.v)
