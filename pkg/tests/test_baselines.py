import math

import numpy as np
import pytest

from haps_isac.baselines import (BaselineKind, circle_flight_design, random_circle,
                                 solve_baseline, solve_isotropic_powers)
from haps_isac.beamforming import SlotProblem, min_normalized_beampattern, slot_problem
from haps_isac.channel import Placement3D, user_channels
from haps_isac.placement import solve_static
from haps_isac.trajectory import audit_dynamic, flight_violations

from conftest import gamma_analog, random_scenario

P = Placement3D(0.0, 0.0, 20e3)


def test_kinds_are_distinct():
    assert len({k.value for k in BaselineKind}) == 6
    assert BaselineKind("circle_flight") is BaselineKind.CIRCLE_FLIGHT


def test_comm_only_single_user_mrt():
    s = random_scenario(20, K=1)
    d = solve_baseline("comm_only_static", s, grid=[P], los_only=True)
    g = user_channels(s, P, los_only=True)[0]
    ref = math.log2(1 + s.power_max * np.vdot(g, g).real / s.noise[0])
    assert d.objective == pytest.approx(ref, rel=5e-3)
    assert d.kind == "comm_only_static"


def test_sandwich_comm_only_dominates_isac():
    s = random_scenario(21, bp_threshold=gamma_analog(-44))
    isac = solve_static(s, [P])
    comm = solve_baseline(BaselineKind.COMM_ONLY_STATIC, s, grid=[P])
    assert comm.objective >= isac.objective * (1 - 1e-3)


def test_sar_only_maximizes_worst_beampattern():
    s = random_scenario(22, bp_threshold=gamma_analog(-50))
    isac = solve_static(s, [P])
    sar = solve_baseline(BaselineKind.SAR_ONLY_STATIC, s, grid=[P])
    prob = slot_problem(s, P)
    isac_min = min_normalized_beampattern(prob, isac.solution.total_covariance)
    assert sar.objective >= isac_min * (1 - 1e-6)
    assert sar.solution.power <= s.power_max * (1 + 1e-7)


def test_isotropic_single_user_closed_form(rng):
    M = 4
    g = (rng.standard_normal((1, M)) + 1j * rng.standard_normal((1, M))) * 1e-4
    steer = np.ones((1, M), complex)
    prob = SlotProblem(g, np.array([1e-9]), np.ones(1), steer, np.array([4e8]), 1e-8, 10.0)
    sol, trace = solve_isotropic_powers(prob)
    powers = sol.meta["powers"]
    # the user's isotropic stream also meets the floor, so all power goes to it
    assert powers[0] == pytest.approx(10.0, rel=1e-6)
    assert powers[1] == pytest.approx(0.0, abs=1e-6)
    ref = math.log2(1 + 10.0 * np.vdot(g[0], g[0]).real / M / 1e-9)
    assert prob.objective(sol) == pytest.approx(ref, rel=1e-6)
    assert np.all(np.diff(trace) >= -1e-9)


def test_isotropic_infeasible_threshold(rng):
    g = np.ones((1, 4), complex) * 1e-4
    prob = SlotProblem(g, np.array([1e-9]), np.ones(1), np.ones((1, 4), complex),
                       np.array([4e8]), 1e-7, 10.0)  # needs 40 W
    from haps_isac.beamforming import InfeasibleError
    with pytest.raises(InfeasibleError):
        solve_isotropic_powers(prob)


def test_random_circle_determinism_and_limits():
    s = random_scenario(23)
    a, b = random_circle(s, 5), random_circle(s, 5)
    np.testing.assert_array_equal(a.h, b.h)
    np.testing.assert_array_equal(a.z, b.z)
    assert not np.array_equal(a.h, random_circle(s, 6).h)
    for seed in range(50):
        assert not flight_violations(random_circle(s.replace(slots=int(3 + seed % 10)), seed), s.replace(
            slots=int(3 + seed % 10)))


def test_circle_flight_design_feasible():
    s = random_scenario(24, bp_threshold=gamma_analog(-50), slots=4, horizon=40.0)
    d = circle_flight_design(s, seed=1)
    assert d.kind == "circle_flight"
    assert not audit_dynamic(s, d)
    assert d.objective > 0
