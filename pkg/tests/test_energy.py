import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from helix.energy import (EnergyKind, dist_to_K, energy, energy_periodic_rows, eval_Phi, eval_W,
                          slice_energy, total_variation_on_mask)
from helix.errors import ParameterError
from helix.field import GridSpec, Rect, VectorField2D

finite = st.floats(-3, 3, allow_nan=False)


def test_W_vanishes_on_wells():
    for b in [(1, 1), (1, -1), (-1, 1), (-1, -1)]:
        assert eval_W(b) == 0 and dist_to_K(b) == 0
    assert eval_W((0, 0)) == 2
    assert eval_W((1, 1 - 2 * 0.25)) == pytest.approx((1 - 0.25) ** 2)


@settings(max_examples=300)
@given(finite, finite)
def test_W_sandwich(b1, b2):
    W, d = eval_W((b1, b2)), dist_to_K((b1, b2))
    assert max(0.5 * d ** 4, d ** 2) <= W * (1 + 1e-12) + 1e-300
    assert W <= 18 * max(d ** 4, d ** 2) * (1 + 1e-12) + 1e-300


def test_phi_matches_quadrature():
    for t in np.linspace(-3, 3, 41):
        q, _ = integrate.quad(lambda s: abs(1 - s * s), 0, t, points=[-1, 1] if abs(t) > 1 else None,
                              epsabs=1e-13, epsrel=1e-13)
        assert eval_Phi(t) == pytest.approx(q, abs=1e-10)


def test_phi_is_odd_and_monotone():
    t = np.linspace(-3, 3, 601)
    assert np.allclose(eval_Phi(-t), -eval_Phi(t))
    assert np.all(np.diff(eval_Phi(t)) >= 0)
    assert eval_Phi(1.0) == pytest.approx(2 / 3)


@settings(max_examples=300)
@given(finite, finite)
def test_phi_inequalities(x, y):
    assert 0.125 * (x - y) ** 2 <= abs(eval_Phi(y) - eval_Phi(x)) * (1 + 1e-12) + 1e-15
    for a in (-1.0, 1.0):
        assert abs(eval_Phi(x) - eval_Phi(a)) <= 4 * (abs(x - a) + abs(x - a) ** 3) * (1 + 1e-12) + 1e-15


@pytest.mark.parametrize("theta", [0.1, 0.25, 0.5])
def test_uniform_energy_closed_form(theta):
    f = VectorField2D.constant(GridSpec.unit(64), 1.0, 1.0 - 2 * theta)
    for k in EnergyKind:
        E = energy(k, f, 0.01)
        assert E.regularizer == 0
        assert E.total == pytest.approx(16 * theta ** 2 * (1 - theta) ** 2, rel=1e-12)


def test_energy_of_single_jump():
    # beta jumps from (1,1) to (-1,1) across x = 1/2: W = 0, |D beta| = 2 along a unit segment
    g = GridSpec.unit(32)
    f = VectorField2D.from_function(g, lambda X, Y: (np.where(X < 0.5, 1.0, -1.0), np.ones_like(X)))
    assert energy("E1", f, 0.1).total == pytest.approx(0.2)
    assert energy(EnergyKind.EA, f, 0.1).regularizer == pytest.approx(0.01 * 4 * 32)
    assert energy("E2", f, 0.1).regularizer == pytest.approx(0.01 * 4 * 32)


def test_region_and_errors():
    f = VectorField2D.constant(GridSpec.unit(16), 0.0, 0.0)
    E = energy("E1", f, 0.1, Rect(0, 0.5, 0, 0.5))
    assert E.bulk == pytest.approx(2 * 0.25)
    assert energy("E1", f, 0.1, Rect(0.2, 0.2, 0, 1)).total == 0
    with pytest.raises(ParameterError):
        energy("E1", f, 0.1, Rect(0, 2, 0, 1))
    with pytest.raises(ParameterError):
        energy("E1", f, 0.0)
    with pytest.raises(ParameterError):
        energy("E3", f, 0.1)


def test_slice_energy():
    g = GridSpec.unit(32)
    f = VectorField2D.from_function(g, lambda X, Y: (np.where(X < 0.5, 1.0, -1.0), np.ones_like(X)))
    assert slice_energy("E1", f, 0.1, "horizontal", 0.5, (0, 1)) == pytest.approx(0.2)
    assert slice_energy("E1", f, 0.1, "vertical", 0.3, (0, 1)) == 0.0
    assert slice_energy("E1", f, 0.1, "horizontal", 0.5, (0.6, 0.4)) == 0.0
    with pytest.raises(ParameterError):
        slice_energy("E1", f, 0.1, "diagonal", 0.5, (0, 1))


def test_periodic_rows_match_full_field():
    rng = np.random.default_rng(3)
    period = rng.normal(size=(12, 8, 2))
    full = np.concatenate([period] * 5, axis=1)
    g_full = GridSpec(12, 40, 0.025, 0, 0)
    g_per = GridSpec(12, 8, 0.025, 0, 0)
    for k in EnergyKind:
        a = energy(k, VectorField2D(g_full, full), 0.3)
        b = energy_periodic_rows(k, VectorField2D(g_per, period), 0.3, 40)
        assert b.total == pytest.approx(a.total, rel=1e-12)
    # row offset: the full field starts three rows into the period
    shifted = np.roll(full, 3, axis=1)
    a = energy("E1", VectorField2D(g_full, shifted), 0.3)
    b = energy_periodic_rows("E1", VectorField2D(g_per, period), 0.3, 40, row_offset=3)
    assert b.total == pytest.approx(a.total, rel=1e-12)


def test_total_variation_on_mask():
    f = VectorField2D.from_function(GridSpec.unit(16), lambda X, Y: (X, 0 * X))
    m = np.ones((16, 16), bool)
    assert total_variation_on_mask(f, m) == pytest.approx(16 * 15 / 16 / 16)
