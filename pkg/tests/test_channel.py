import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from haps_isac.channel import (Placement3D, aod_cosine, distance, nlos_component, path_gain,
                               rician_channel, steering_from_cosine, steering_vector)

coord = st.floats(-5e4, 5e4, allow_nan=False)
alt = st.floats(1e3, 3.5e4, allow_nan=False)


def test_distance_examples(rng):
    assert distance(Placement3D(0, 0, 20000), (0, 0)) == 20000
    assert distance(Placement3D(0, 0, 1000), (1000, 0)) == pytest.approx(1414.2136, abs=1e-4)
    for _ in range(50):
        p, g = rng.uniform(-1e4, 1e4, 3), rng.uniform(-1e4, 1e4, 2)
        p[2] = abs(p[2]) + 1
        assert distance(p, g) == pytest.approx(np.linalg.norm(p - np.append(g, 0.0)), rel=1e-14)


def test_aod_cosine():
    assert aod_cosine(Placement3D(0, 0, 5), (0, 0)) == 1.0
    assert aod_cosine(Placement3D(0, 0, 1000), (1000, 0)) == pytest.approx(0.70711, abs=1e-5)
    assert 0 < aod_cosine(Placement3D(0, 0, 1e-3), (1e6, 0)) < 1e-8


def test_steering_examples():
    np.testing.assert_allclose(steering_vector(Placement3D(0, 0, 1), (0, 0), 4), [1, -1, 1, -1],
                               atol=1e-15)
    np.testing.assert_allclose(steering_from_cosine(0.0, 4), [1, 1, 1, 1])


@given(coord, coord, alt, coord, coord, st.integers(1, 16))
def test_steering_unit_modulus(x, y, z, gx, gy, M):
    a = steering_vector(Placement3D(x, y, z), (gx, gy), M)
    assert a[0] == 1
    np.testing.assert_allclose(np.abs(a), 1.0, rtol=1e-12)
    assert np.vdot(a, a).real == pytest.approx(M)


@given(coord, coord, alt, coord, coord)
def test_aod_cosine_range(x, y, z, gx, gy):
    c = aod_cosine(Placement3D(x, y, z), (gx, gy))
    assert 0 < c <= 1


def test_aod_cosine_lipschitz(rng):
    # |d c / d h| <= 1/z on z >= H_min
    for _ in range(200):
        p = np.array([*rng.uniform(-3e4, 3e4, 2), rng.uniform(2e4, 3e4)])
        g = rng.uniform(-3e4, 3e4, 2)
        dp = rng.standard_normal(2)
        dp *= 10.0 / np.linalg.norm(dp)
        q = p.copy()
        q[:2] += dp
        assert abs(aod_cosine(q, g) - aod_cosine(p, g)) <= 10.0 / 2e4 + 1e-15


def test_path_gain():
    assert path_gain(20000, 1000) == pytest.approx(2.5e-6)
    assert path_gain(2.0, 7.0) == pytest.approx(path_gain(1.0, 7.0) / 4)
    assert path_gain(1.0, 1000) == 1000


def test_rician_los_limit_and_determinism():
    p, g = Placement3D(100, -50, 20000), (500, 300)
    los = np.sqrt(1000) / distance(p, g) * steering_vector(p, g, 6)
    np.testing.assert_array_equal(rician_channel(p, g, np.inf, 6, 1000), los)
    np.testing.assert_array_equal(rician_channel(p, g, 10, 6, 1000, los_only=True), los)
    assert np.linalg.norm(los) ** 2 == pytest.approx(6 * 1000 / distance(p, g) ** 2, rel=1e-13)
    a = rician_channel(p, g, 10, 6, 1000, seed=3, user=1, slot=2)
    b = rician_channel(p, g, 10, 6, 1000, seed=3, user=1, slot=2)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, rician_channel(p, g, 10, 6, 1000, seed=3, user=1, slot=3))


def test_nlos_key_independence():
    first = nlos_component(7, 2, 5, 4)
    for k in range(5):
        nlos_component(7, k, 0, 4)
    np.testing.assert_array_equal(nlos_component(7, 2, 5, 4), first)


def test_rician_mean_power_monte_carlo():
    p, g, M, rho0 = Placement3D(0, 0, 20000), (3000, -1000), 4, 1000.0
    d = distance(p, g)
    power = np.mean([np.vdot(h, h).real for h in
                     (rician_channel(p, g, 10, M, rho0, seed=s) for s in range(100_000))])
    assert power == pytest.approx(M * rho0 / d ** 2, rel=0.02)
