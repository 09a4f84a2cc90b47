import math

import numpy as np
import pytest

from haps_isac.channel import Placement3D, distance, steering_vector
from haps_isac.radar import (beampattern_gain, bp_constraint_ok, check_hermitian, is_psd, sar_snr,
                             sar_snr_constant, snr_power_floor)
from haps_isac.scenario import SarParams, builtin_scenario

from conftest import random_psd


def double_sum_gain(p, t, H):
    M = H.shape[0]
    c = (p[2]) / distance(p, t)
    return sum((H[i, j] * np.exp(1j * math.pi * (j - i) * c)).real
               for i in range(M) for j in range(M))


def test_isotropic_and_boresight():
    p, t = Placement3D(0, 0, 20e3), (5e3, -3e3)
    assert beampattern_gain(p, t, 10 / 12 * np.eye(12)) == pytest.approx(10.0)
    a = steering_vector(p, t, 6)
    assert beampattern_gain(p, t, 2.5 * np.outer(a, a.conj())) == pytest.approx(2.5 * 36)


def test_gain_matches_double_sum_and_is_linear(rng):
    for _ in range(20):
        M = int(rng.integers(2, 9))
        p = Placement3D(*rng.uniform(-1e4, 1e4, 2), rng.uniform(2e4, 3e4))
        t = tuple(rng.uniform(-3e4, 3e4, 2))
        H1, H2 = random_psd(rng, M), random_psd(rng, M, 1)
        g = beampattern_gain(p, t, H1)
        assert g == pytest.approx(double_sum_gain(p, t, H1), rel=1e-10)
        assert 0 <= g <= M * np.trace(H1).real * (1 + 1e-12)
        assert beampattern_gain(p, t, H1 + H2) == pytest.approx(
            g + beampattern_gain(p, t, H2), rel=1e-10)


def test_constraint_boundary_and_isotropic_case():
    p, t = Placement3D(0, 0, 20e3), (20e3, 0)  # 45 degree look
    H = 10 / 12 * np.eye(12)
    d2 = distance(p, t) ** 2
    assert bp_constraint_ok(p, t, H, 0.0)
    assert bp_constraint_ok(p, t, H, 10.0 / d2)  # boundary inclusive
    assert not bp_constraint_ok(p, t, H, 10.0 / d2 * (1 + 1e-6))
    # -66 dBm (mW-scale 10^-6.6) vs d^2 = 8e8 m^2: need 0.2 W, have 10 W
    gamma = 10 ** -6.6 * 1e-3
    assert gamma * d2 == pytest.approx(0.2009, rel=1e-3)
    assert bp_constraint_ok(p, t, H, gamma)
    # -36 dBm: need about 201 W, have 10 W
    assert not bp_constraint_ok(p, t, H, 10 ** -3.6 * 1e-3 * 1e3)


def test_sar_snr_closed_form():
    sar = SarParams()
    lam, alpha = 0.15, math.radians(45)
    # hand factorization with linear constants from the radar parameter table
    num = 10 ** 7 * lam ** 3 * 1.0 * 299792458.0 * 10e-6 * 2.0 * 0.5
    den = 256 * math.pi ** 3 * 1.380649e-23 * 290 * 10 ** 0.6 * 200e6 * 10
    c0 = num / den
    assert sar_snr_constant(sar, lam, alpha) == pytest.approx(c0, rel=1e-12)
    assert c0 == pytest.approx(3.998e14, rel=1e-3)
    snr = sar_snr(20e3, 50, 10, sar, lam, alpha)
    assert snr == pytest.approx(c0 * 10 / (20e3 ** 3 * 50), rel=1e-12)
    assert sar_snr(20e3, 50, 20, sar, lam, alpha) == pytest.approx(2 * snr)
    assert sar_snr(40e3, 50, 10, sar, lam, alpha) == pytest.approx(snr / 8)


def test_sar_snr_monotonicity(rng):
    sar = SarParams()
    for _ in range(100):
        z, V, P = rng.uniform(1e4, 4e4), rng.uniform(1, 100), rng.uniform(0.1, 50)
        s = sar_snr(z, V, P, sar, 0.15, 0.7)
        assert sar_snr(z, V, P * 1.01, sar, 0.15, 0.7) > s
        assert sar_snr(z * 1.01, V, P, sar, 0.15, 0.7) < s
        assert sar_snr(z, V * 1.01, P, sar, 0.15, 0.7) < s


def test_snr_power_floor_inverts_snr():
    s = builtin_scenario("full").replace(snr_min=10.0)
    P = snr_power_floor(s, 25e3)
    snr = sar_snr(25e3, s.flight.V_max, P, s.sar, s.wavelength, s.flight.obs_angle)
    assert snr == pytest.approx(10.0, rel=1e-12)
    assert snr_power_floor(s.replace(snr_min=0.0), 25e3) == 0.0


def test_hermitian_checks(rng):
    A = random_psd(rng, 4)
    assert check_hermitian(A, psd=True) is A
    with pytest.raises(ValueError):
        check_hermitian(A + np.triu(np.ones((4, 4)), 1))
    with pytest.raises(ValueError):
        check_hermitian(np.zeros((3, 4)))
    with pytest.raises(ValueError):
        check_hermitian(-A, psd=True)
    assert is_psd(A - 1e-12 * np.trace(A).real * np.eye(4) / 4 - np.eye(4) * 0)
    assert not is_psd(np.diag([1.0, -1e-3]))
