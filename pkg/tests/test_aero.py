import math

import numpy as np
import pytest

from haps_isac.aero import (air_density, energy_bound, energy_ledger, propulsion_bound_coefficient,
                            scf_power, shf_power, slot_speeds, thrust)
from haps_isac.scenario import AeroParams, builtin_scenario
from haps_isac.trajectory import Trajectory

AERO = AeroParams()


def test_air_density_fit():
    # quoted values agree with the fit to half a unit in the 4th decimal place
    assert air_density(20e3) == pytest.approx(0.0882, abs=5e-5)
    assert air_density(30e3) == pytest.approx(0.0411, abs=5e-5)
    assert air_density(20e3) == pytest.approx(0.08817607, rel=1e-9)
    assert air_density(30e3) == pytest.approx(0.04105047, rel=1e-9)
    # the quadratic has its vertex near 27.48 km, so it is not monotone on the window
    vertex = 52.29356 / (2 * 0.95162) * 1e3
    assert air_density(25e3) < air_density(30e3) < air_density(20e3)
    z = np.linspace(18e3, 32e3, 1401)
    assert np.all(np.diff(air_density(z[z < vertex])) < 0)
    assert np.all(np.diff(air_density(z[z > vertex])) > 0)
    assert np.all(air_density(z) > 0)
    np.testing.assert_allclose(air_density(np.array([20e3, 30e3])),
                               [air_density(20e3), air_density(30e3)])
    for z in (17e3, 33e3):
        with pytest.raises(ValueError):
            air_density(z)


def test_thrust():
    approx = thrust(0.0882, 50, AERO, approximate=True)
    assert approx == pytest.approx(0.5 * 0.0882 * 2500 * 143 * 0.015, rel=1e-12)
    assert approx == pytest.approx(236.5, abs=0.05)
    full = thrust(0.0882, 50, AERO)
    induced = 2 * AERO.F_w ** 2 / (math.pi * 0.6385 * 30 * 0.0882 * 143 * 2500)
    assert full - approx == pytest.approx(induced, rel=1e-12)
    assert full > approx > 0
    assert thrust(0.0882, 1e4, AERO, True) / thrust(0.0882, 1e4, AERO) == pytest.approx(1, abs=1e-9)


def test_propulsion_power():
    p = scf_power(0.0882, 50, AERO, 0.0, approximate=True)
    assert p == pytest.approx(15.46e3, rel=0.005)
    assert p == shf_power(0.0882, 50, AERO, approximate=True)
    assert scf_power(0.0882, 50, AERO, 0.3, True) == pytest.approx(p / math.cos(0.3) ** 2)
    assert scf_power(0.0882, 100, AERO, 0.2, True) == pytest.approx(
        8 * scf_power(0.0882, 50, AERO, 0.2, True), rel=1e-12)
    V = np.linspace(1, 120, 200)
    assert np.all(np.diff(scf_power(0.0882, V, AERO, 0.1, True)) > 0)


def test_energy_bound_convex_in_altitude():
    s = builtin_scenario("full")
    z = np.linspace(s.flight.H_min, s.flight.H_max, 401)
    e = energy_bound(z, s)
    assert np.all(e[:-2] - 2 * e[1:-1] + e[2:] > 0)


def test_ledger_matches_bound_at_extremes():
    s = builtin_scenario("full").replace(slots=4, horizon=40.0, e_start=None)
    z = np.full(5, 24e3)
    traj = Trajectory(np.zeros((5, 2)), z)
    led = energy_ledger(traj, np.full(4, s.power_max), s, speeds=np.full(4, s.flight.V_max))
    np.testing.assert_allclose(led.per_slot, energy_bound(z[1:], s), rtol=1e-12)
    assert led.feasible and led.budget is None
    assert propulsion_bound_coefficient(s) * air_density(24e3) == pytest.approx(
        scf_power(air_density(24e3), s.flight.V_max, s.aero, s.flight.bank_angle, True))


def test_ledger_summation_oracle(rng):
    s = builtin_scenario("full").replace(slots=6, horizon=60.0)
    h = np.cumsum(rng.uniform(-100, 100, (7, 2)), axis=0)
    z = rng.uniform(21e3, 29e3, 7)
    traj = Trajectory(h, z)
    p_ave = rng.uniform(0, 10, 6)
    led = energy_ledger(traj, p_ave, s.replace(e_start=1e12))
    brute = 0.0
    for n in range(1, 7):
        V = math.dist((*h[n], z[n]), (*h[n - 1], z[n - 1])) / s.dt
        rho = air_density(z[n])
        brute += (p_ave[n - 1] + 0.5 * rho * V ** 3 * 143 * 0.015 / 0.765
                  / math.cos(s.flight.bank_angle) ** 2) * s.dt
    assert led.cumulative == pytest.approx(brute, rel=1e-12)
    assert led.feasible
    assert not energy_ledger(traj, p_ave, s.replace(e_start=brute * 0.99)).feasible
    np.testing.assert_allclose(slot_speeds(traj, s.dt) * s.dt,
                               np.linalg.norm(np.diff(np.column_stack([h, z]), axis=0), axis=1))
