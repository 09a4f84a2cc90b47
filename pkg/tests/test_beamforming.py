import math

import numpy as np
import pytest

from haps_isac.beamforming import (InfeasibleError, SlotProblem, build_sdr, build_surrogate,
                                   extract_rank_one, initial_point, randomize, slot_problem,
                                   solve_beamforming, surrogate_rates)
from haps_isac.channel import Placement3D
from haps_isac.comm import BeamformingSolution, rates

from conftest import gamma_analog, random_psd, random_scenario


def random_problem(rng, K=2, M=4, Q=2, gamma=0.0, sensing=True, power_max=10.0):
    G = (rng.standard_normal((K, M)) + 1j * rng.standard_normal((K, M))) * 1e-4
    steer = np.exp(1j * math.pi * np.outer(rng.uniform(0, 1, Q), np.arange(M)))
    return SlotProblem(G, np.full(K, 1e-9), np.ones(K), steer, np.full(Q, 1.0), gamma, power_max,
                       sensing=sensing)


def test_surrogate_tangent_and_lower_bound(rng):
    K, M = 3, 4
    G = rng.standard_normal((K, M)) + 1j * rng.standard_normal((K, M))
    noise = np.full(K, 0.7)
    W0 = np.array([random_psd(rng, M, 1) for _ in range(K)])
    Rs0 = random_psd(rng, M)
    pt = build_surrogate(G, noise, W0, Rs0)
    true0 = rates(G, BeamformingSolution(W0, Rs0), noise)
    np.testing.assert_allclose(surrogate_rates(G, noise, pt, W0, Rs0), true0, rtol=1e-12)
    assert all(np.linalg.eigvalsh(B).min() > -1e-12 for B in pt.B_bar)
    for _ in range(1000):
        W = np.array([random_psd(rng, M, int(rng.integers(1, M + 1))) * rng.uniform(0, 2)
                      for _ in range(K)])
        Rs = random_psd(rng, M) * rng.uniform(0, 2)
        true = rates(G, BeamformingSolution(W, Rs), noise)
        assert np.all(surrogate_rates(G, noise, pt, W, Rs) <= true + 1e-10)


def test_surrogate_single_user(rng):
    G = rng.standard_normal((1, 3)) + 1j * rng.standard_normal((1, 3))
    Rs0 = random_psd(rng, 3)
    pt = build_surrogate(G, [1.0], random_psd(rng, 3, 1)[None], Rs0)
    ipn = (G[0].conj() @ Rs0 @ G[0]).real + 1.0
    assert pt.a_bar[0] == pytest.approx(math.log2(ipn))
    assert np.linalg.eigvalsh(pt.B_bar[0]).min() > -1e-12


def test_sdr_constraint_counts(rng):
    prob = random_problem(rng, K=3, Q=4)
    init = initial_point(prob)
    prog = build_sdr(prob, build_surrogate(prob.channels, prob.noise, init.W, init.Rs))
    assert prog.count() == prob.Q + 2
    assert prog.labels() == {"beampattern": 4, "snr": 1, "power": 1}
    assert len(prog.herm_vars) == prob.K + 1


def test_large_threshold_infeasible(rng):
    prob = random_problem(rng, gamma=4 * 10.0 * 1.01)  # above M * P_max / d^2
    with pytest.raises(InfeasibleError) as exc:
        solve_beamforming(prob)
    assert exc.value.constraint == "beampattern"
    prob = random_problem(rng, gamma=4 * 10.0 * 0.999)
    prob.target_steering[1] = prob.target_steering[0].conj()  # two far-apart beams
    with pytest.raises(InfeasibleError):
        solve_beamforming(prob)


def test_snr_floor_infeasible(rng):
    prob = random_problem(rng)
    prob.power_floor = 11.0
    with pytest.raises(InfeasibleError) as exc:
        solve_beamforming(prob)
    assert exc.value.constraint == "snr"


def test_single_user_mrt_closed_form(rng):
    for _ in range(3):
        prob = random_problem(rng, K=1, M=2, Q=1)
        sol, trace = solve_beamforming(prob)
        g = prob.channels[0]
        ref = math.log2(1 + prob.power_max * np.vdot(g, g).real / prob.noise[0])
        assert prob.objective(sol) == pytest.approx(ref, rel=5e-3)
        assert trace.is_monotone()


def test_two_antenna_brute_force(rng):
    """K=1, M=2 with an active beampattern floor against a grid over rank-one beams."""
    prob = random_problem(rng, K=1, M=2, Q=1)
    g, a = prob.channels[0], prob.target_steering[0]
    th = np.linspace(0, math.pi / 2, 721)
    ph = np.linspace(0, 2 * math.pi, 1441)
    T, F = np.meshgrid(th, ph, indexing="ij")
    w = np.sqrt(prob.power_max) * np.stack([np.cos(T), np.sin(T) * np.exp(1j * F)])
    sig = np.abs(np.einsum("m,m...->...", g.conj(), w)) ** 2
    bp = np.abs(np.einsum("m,m...->...", a.conj(), w)) ** 2
    prob.gamma = 0.5 * (bp[np.unravel_index(np.argmax(sig), sig.shape)] + bp.max())
    feasible = bp >= prob.gamma
    brute = math.log2(1 + sig[feasible].max() / prob.noise[0])
    sol, _ = solve_beamforming(prob)
    assert not prob.violations(sol)
    assert prob.objective(sol) == pytest.approx(brute, rel=0.01)
    assert prob.objective(sol) >= brute - 1e-3


def test_zero_threshold_matches_comm_only():
    s = random_scenario(3, bp_threshold=0.0)
    p = Placement3D(0, 0, 20e3)
    isac, _ = solve_beamforming(slot_problem(s, p, los_only=True))
    comm, _ = solve_beamforming(slot_problem(s, p, los_only=True, sensing=False))
    prob = slot_problem(s, p, los_only=True)
    assert prob.objective(isac) == pytest.approx(prob.objective(comm), rel=2e-3)


def test_desk_convergence_and_feasibility():
    for seed in range(3):
        s = random_scenario(seed, bp_threshold=gamma_analog(-50))
        prob = slot_problem(s, Placement3D(0, 0, 20e3), slot=0)
        sol, trace = solve_beamforming(prob)
        assert trace.iterations <= 10
        assert trace.is_monotone(1e-6)
        assert not prob.violations(sol, rtol=1e-6)
        assert sol.meta["iterations"] == trace.iterations


def test_fixed_point_init():
    s = random_scenario(4, bp_threshold=0.0)
    prob = slot_problem(s, Placement3D(500, 0, 21e3), los_only=True, sensing=False)
    sol, _ = solve_beamforming(prob, eps=1e-6)
    again, trace = solve_beamforming(prob, init=sol)
    assert trace.iterations == 1
    assert abs(trace.objectives[1] - trace.objectives[0]) <= 1e-3 * trace.objectives[0]
    assert prob.objective(again) >= prob.objective(sol) - 1e-9


def test_rank_one_identities(rng):
    for _ in range(20):
        K, M = 3, 4
        G = rng.standard_normal((K, M)) + 1j * rng.standard_normal((K, M))
        sol = BeamformingSolution(np.array([random_psd(rng, M) for _ in range(K)]), random_psd(rng, M))
        out = extract_rank_one(sol, G)
        for k in range(K):
            own = (G[k].conj() @ sol.W[k] @ G[k]).real
            assert abs(np.vdot(G[k], out.w[k])) ** 2 == pytest.approx(own, rel=1e-9)
        np.testing.assert_allclose(out.total_covariance, sol.total_covariance, atol=1e-9 * sol.power)
        assert out.power == pytest.approx(sol.power, rel=1e-12)
        assert np.linalg.eigvalsh(out.Rs).min() >= -1e-9 * sol.power
        np.testing.assert_allclose(rates(G, out, np.ones(K)), rates(G, sol, np.ones(K)), rtol=1e-8)


def test_rank_one_input_unchanged(rng):
    G = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    w = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    sol = BeamformingSolution.from_vectors(w, random_psd(rng, 3))
    out = extract_rank_one(sol, G)
    np.testing.assert_allclose(out.W, sol.W, atol=1e-12)
    np.testing.assert_allclose(out.Rs, sol.Rs, atol=1e-12)
    assert out.meta["rank_one"] == "reconstruction"


def test_randomization_feasible(rng):
    prob = random_problem(rng, gamma=0.5)
    sol, _ = solve_beamforming(prob)
    out = randomize(sol, prob, seed=3)
    assert out.meta["rank_one"] == "randomization"
    assert not prob.violations(out)
    # near rank-one covariances: the best draw is close to the relaxed value
    assert prob.objective(out) == pytest.approx(prob.objective(sol), rel=0.05)
    again = randomize(sol, prob, seed=3)
    np.testing.assert_array_equal(out.w, again.w)
