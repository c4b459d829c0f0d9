import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helix.energy import eval_W
from helix.errors import ConsistencyError, DegeneratePairError, ParameterError
from helix.spin import (AngleFields, ModelParams, SpinField, build_spiral, detect_vortices, extract_angles,
                        renormalized_energy, spin_energy, spiral_angles, to_continuum, triple_terms)


def brute_force_F(s, alpha):
    # independent pair enumeration
    m = s.m
    u = s.vectors()
    tot = 0.0
    for i in range(m):
        for j in range(m):
            for di, dj, w in ((1, 0, -alpha), (0, 1, -alpha), (2, 0, 1.0), (0, 2, 1.0)):
                if i + di < m and j + dj < m:
                    tot += w * float(u[i, j] @ u[i + di, j + dj])
    return tot


def test_constant_field_energy():
    assert spin_energy(SpinField.constant(4), 2.0) == pytest.approx(-32.0)
    assert spin_energy(SpinField.constant(4), 0.0) == pytest.approx(16.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 7), st.floats(0, 5), st.integers(0, 2 ** 31))
def test_spin_energy_matches_enumeration(m, alpha, seed):
    s = SpinField.from_angles(np.random.default_rng(seed).uniform(-math.pi, math.pi, (m, m)))
    assert spin_energy(s, alpha) == pytest.approx(brute_force_F(s, alpha), abs=1e-9)


def test_flipping_a_spin_costs_energy_for_large_alpha():
    s = SpinField.constant(6)
    a = s.values.copy()
    a[2, 3] = math.pi
    assert spin_energy(SpinField.from_angles(a), 4.5) > spin_energy(s, 4.5)


def test_renormalized_energy_examples():
    for alpha in (1.0, 2.0, 3.0, 3.9):
        s = build_spiral(ModelParams(alpha, 1 / 16))
        assert renormalized_energy(s, alpha) <= 1e-10
        th, tv = triple_terms(s, alpha)
        assert max(th.max(), tv.max()) < 1e-12
    s = SpinField.constant(8)
    assert renormalized_energy(s, 2.0) > 0
    assert renormalized_energy(s, 2.0) == pytest.approx(0.5 * 2 * 8 * 6 * (2 - 1.0) ** 2)
    assert renormalized_energy(s, 4.0) == 0.0
    with pytest.raises(ParameterError):
        renormalized_energy(s, 4.5)


def test_energies_invariant_under_global_rotation():
    rng = np.random.default_rng(0)
    alpha, m = 2.5, 10
    a = rng.uniform(-0.3, 0.3, (m, m))
    s1 = SpinField.from_angles(a)
    s2 = SpinField.from_angles(a + 0.1 * (np.arange(m) >= 0))
    # a global rotation changes neither
    assert spin_energy(s2, alpha) == pytest.approx(spin_energy(s1.rotated(0.1), alpha))
    assert renormalized_energy(s2, alpha) == pytest.approx(renormalized_energy(s1, alpha))


def test_spiral_angles():
    p = ModelParams(2 * math.sqrt(2), 1 / 8)
    assert p.optimal_angle == pytest.approx(math.pi / 4)
    assert ModelParams(3.999999, 0.1).optimal_angle < 2e-3
    s = build_spiral(p, chi_row=1, chi_col=-1)
    a = extract_angles(s)
    assert np.allclose(a.theta_hor, math.pi / 4) and np.allclose(a.theta_ver, -math.pi / 4)
    assert detect_vortices(a) == []
    with pytest.raises(ParameterError):
        build_spiral(p, chi_row=2)
    with pytest.raises(ParameterError):
        ModelParams(4.0, 0.1)


def test_extract_angles_consistency():
    rng = np.random.default_rng(5)
    a = rng.uniform(-math.pi, math.pi, (9, 9))
    s = SpinField.from_angles(a)
    ang = extract_angles(s)
    u = s.vectors()
    rot = lambda t, v: np.stack([np.cos(t) * v[..., 0] - np.sin(t) * v[..., 1],
                                 np.sin(t) * v[..., 0] + np.cos(t) * v[..., 1]], axis=-1)
    assert np.abs(rot(ang.theta_hor, u[:-1]) - u[1:]).max() < 1e-12
    assert np.abs(rot(ang.theta_ver, u[:, :-1]) - u[:, 1:]).max() < 1e-12
    assert np.all(np.abs(ang.theta_hor) <= math.pi)


def test_reconstruct_smooth_field_along_paths():
    m = 16
    X, Y = np.meshgrid(np.arange(m) / m, np.arange(m) / m, indexing="ij")
    s = SpinField(1 / m, 2 * np.sin(3 * X) + np.cos(2 * Y) + X * Y)
    ang = extract_angles(s)
    # walk along the first row then up each column, and the other way round
    rows_first = np.zeros((m, m))
    rows_first[1:, 0] = np.cumsum(ang.theta_hor[:, 0])
    rows_first[:, 1:] = rows_first[:, :1] + np.cumsum(ang.theta_ver, axis=1)
    cols_first = np.zeros((m, m))
    cols_first[0, 1:] = np.cumsum(ang.theta_ver[0, :])
    cols_first[1:, :] = cols_first[:1, :] + np.cumsum(ang.theta_hor, axis=0)
    for path in (rows_first, cols_first):
        rec = s.values[0, 0] + path
        assert np.abs(np.exp(1j * rec) - np.exp(1j * s.values)).max() < 1e-10


def test_antipodal_pair_rejected():
    a = np.zeros((4, 4))
    a[1, 2] = math.pi
    with pytest.raises(DegeneratePairError) as e:
        extract_angles(SpinField.from_angles(a))
    assert e.value.sites


def test_single_vortex_detected_and_rotation_invariant():
    m = 8
    X, Y = np.meshgrid(np.arange(m) - 3.5, np.arange(m) - 3.5, indexing="ij")
    s = SpinField.from_angles(np.arctan2(Y, X) + math.pi / 2)
    v = detect_vortices(extract_angles(s))
    assert v == [((3, 3), 1)]
    assert detect_vortices(extract_angles(s.rotated(0.7))) == v
    anti = SpinField.from_angles(-np.arctan2(Y, X))
    assert detect_vortices(extract_angles(anti)) == [((3, 3), -1)]


def test_detect_vortices_consistency_error():
    th = np.zeros((2, 3))
    th[:, 0] = 1.0  # plaquette sum of 1 rad is no multiple of 2 pi
    tv = np.zeros((3, 2))
    with pytest.raises(ConsistencyError):
        detect_vortices(AngleFields(th, tv))


def test_to_continuum_spiral_and_constant():
    p = ModelParams(4 * (1 - 0.01), 1 / 32)
    f, sigma, mu = to_continuum(build_spiral(p), p)
    assert sigma == pytest.approx(p.eps / math.sqrt(0.02))
    assert np.allclose(np.abs(f.values), 1.0, atol=0.01)
    assert mu.atoms == ()
    f, _, _ = to_continuum(SpinField.constant(32), p)
    assert np.all(f.values == 0) and np.all(eval_W(f.values) == 2)


def test_to_continuum_mass_convention():
    m = 8
    X, Y = np.meshgrid(np.arange(m) - 3.5, np.arange(m) - 3.5, indexing="ij")
    s = SpinField.from_angles(np.arctan2(Y, X))
    p = ModelParams(3.0, 1 / m)
    _, sigma, mu = to_continuum(s, p)
    assert mu.atom_mass == pytest.approx(2 * math.pi * sigma)
    _, _, mu1 = to_continuum(s, p, mass="unit")
    assert mu1.atom_mass == pytest.approx(sigma)
    with pytest.raises(ParameterError):
        to_continuum(s, p, mass="pi")
