"""Comparison schemes: communication-only, sensing-only, isotropic, circle flight."""

from __future__ import annotations

import enum
import math
import time

import numpy as np

from . import conic
from .beamforming import InfeasibleError, SlotProblem, _checked, slot_problem, solve_sensing_only
from .comm import BeamformingSolution
from .conic import Affine, ConicProgram, Linear, LogTerm, VectorVar
from .placement import StaticDesign, solve_static
from .trajectory import (INIT_MARGIN, DynamicDesign, RateObjective, SensingObjective, Trajectory,
                         circular_init, finish_design, flight_violations, slot_beamforming,
                         solve_dynamic, solve_trajectory)

LOG2E = 1.0 / math.log(2.0)


class BaselineKind(str, enum.Enum):
    COMM_ONLY_STATIC = "comm_only_static"
    SAR_ONLY_STATIC = "sar_only_static"
    COMM_ONLY_DYNAMIC = "comm_only_dynamic"
    SAR_ONLY_DYNAMIC = "sar_only_dynamic"
    ISOTROPIC_DYNAMIC = "isotropic_dynamic"
    CIRCLE_FLIGHT = "circle_flight"


# ---------------------------------------------------------------------------
# isotropic transmission

def _isotropic_solution(p: np.ndarray, M: int) -> BeamformingSolution:
    eye = np.eye(M, dtype=complex)
    W = np.array([pk / M * eye for pk in p[:-1]])
    return BeamformingSolution(W, p[-1] / M * eye, meta={"powers": p.tolist()})


def solve_isotropic_powers(problem: SlotProblem, init: np.ndarray | None = None, eps: float = 1e-3,
                           max_iter: int = 50, tol: float | None = None):
    """SCA over the power vector [P_1..P_K, P_t] with W_k = P_k/M I, Rs = P_t/M I.

    Isotropic covariances give a^H H a = P_total towards every ground point,
    so the beampattern floors reduce to P_total >= Gamma max_q d_q^2.
    """
    K, M = problem.K, problem.M
    c = np.sum(np.abs(problem.channels) ** 2, axis=1) / M  # g^H (I/M) g
    need = max(problem.power_floor, float(np.max(problem.bp_required)) if problem.sensing and problem.Q else 0.0)
    if need > problem.power_max * (1 + 1e-9):
        raise InfeasibleError("beampattern" if need > problem.power_floor else "snr")
    if init is None:
        p = np.append(np.full(K, problem.power_max / K), 0.0)
    else:
        p = np.array(init, dtype=float)
    if not problem.sensing:
        p[-1] = 0.0

    def objective(p):
        out = 0.0
        for k in range(K):
            rx = c[k] * p
            out += problem.beta[k] * math.log2(1 + rx[k] / (rx.sum() - rx[k] + problem.noise[k]))
        return out

    total = Affine.coef("p", np.ones(K + 1))
    cons = [Linear(total, hi=problem.power_max, label="power"),
            Linear(total, lo=need, label="beampattern")]
    if not problem.sensing:
        e = np.zeros(K + 1)
        e[-1] = 1.0
        cons.append(Linear(Affine.coef("p", e), hi=0.0, label="no_sensing"))
    trace = [objective(p)]
    for _ in range(max_iter):
        logs, lin = [], Affine()
        for k in range(K):
            a = c[k] * np.ones(K + 1)
            logs.append(LogTerm(problem.beta[k], Affine.coef("p", a / problem.noise[k]) + 1.0))
            a_int = a.copy()
            a_int[k] = 0.0
            ipn = float(a_int @ p) + problem.noise[k]
            grad = LOG2E * a_int / ipn
            lin = lin + problem.beta[k] * (Affine(math.log2(problem.noise[k]) - math.log2(ipn)
                                                  + float(grad @ p)) - Affine.coef("p", grad))
        prog = ConicProgram(vec_vars=(VectorVar("p", K + 1, nonneg=True),), log_terms=tuple(logs),
                            linear=lin, constraints=tuple(cons))
        res = _checked(conic.solve(prog, tol), "power")
        p_new = np.maximum(res.values["p"], 0.0)
        new = objective(p_new)
        if new < trace[-1]:
            break
        gain = (new - trace[-1]) / max(abs(trace[-1]), 1e-12)
        p = p_new
        trace.append(new)
        if gain < eps:
            break
    return _isotropic_solution(p, M), trace


def solve_isotropic_dynamic(scenario, *, eps: float = 1e-3, max_outer: int = 10, max_iter: int = 50,
                            tol: float | None = None, tr_eps: float = 1.0, max_steps: int = 50) -> DynamicDesign:
    traj = circular_init(scenario)
    powers, prev, outer, trs = None, None, [], []
    t0 = time.perf_counter()
    for it in range(max_outer):
        sols = []
        for n, pt in enumerate(traj.slot_points()):
            prob = slot_problem(scenario, pt, los_only=True, snr_altitude=scenario.flight.H_max)
            warm = None if powers is None else powers[n]
            sol, _ = solve_isotropic_powers(prob, warm, eps=eps, max_iter=max_iter, tol=tol)
            sols.append(sol)
        powers = [np.array(s.meta["powers"]) for s in sols]
        obj_bf = RateObjective(scenario, sols).value(traj)
        traj, tr = solve_trajectory(scenario, sols, traj, eps=tr_eps, max_steps=max_steps, tol=tol)
        trs.append(tr)
        obj = tr.objectives[-1]
        outer.append({"iteration": it + 1, "objective_beamforming": obj_bf, "objective": obj,
                      "accepted_steps": tr.events.count("accepted"),
                      "time": round(time.perf_counter() - t0, 6)})
        if prev is not None and (obj - prev) / max(abs(prev), 1e-12) < eps:
            break
        prev = obj
    return finish_design(scenario, traj, sols, obj, outer=outer, tr_traces=trs,
                         kind=BaselineKind.ISOTROPIC_DYNAMIC.value)


# ---------------------------------------------------------------------------
# sensing-only dynamic design

def solve_sar_only_dynamic(scenario, *, eps: float = 1e-3, max_outer: int = 10, tol: float | None = None,
                           tr_eps: float = 1.0, max_steps: int = 50) -> DynamicDesign:
    """Alternate per-slot max-min sensing covariances with trajectory steps.

    The objective is the slot average of min_q a_q^H Rs a_q / d_q^2 (W/m^2).
    """
    traj = circular_init(scenario)
    prev, outer, trs = None, [], []
    for it in range(max_outer):
        sols = []
        for pt in traj.slot_points():
            prob = slot_problem(scenario, pt, los_only=True, snr_altitude=scenario.flight.H_max)
            sols.append(solve_sensing_only(prob, tol)[0])
        model = SensingObjective(scenario, sols)
        obj_bf = model.value(traj) / model.SCALE
        traj, tr = solve_trajectory(scenario, sols, traj, eps=tr_eps, objective=model, sensing=False,
                                    max_steps=max_steps, tol=tol)
        trs.append(tr)
        obj = tr.objectives[-1] / model.SCALE
        outer.append({"iteration": it + 1, "objective_beamforming": obj_bf, "objective": obj,
                      "accepted_steps": tr.events.count("accepted")})
        if prev is not None and (obj - prev) / max(abs(prev), 1e-300) < eps:
            break
        prev = obj
    return finish_design(scenario, traj, sols, obj, outer=outer, tr_traces=trs,
                         kind=BaselineKind.SAR_ONLY_DYNAMIC.value)


# ---------------------------------------------------------------------------
# circle flight

def random_circle(scenario, seed: int) -> Trajectory:
    """Closed 3D circle with random centre, radius and altitude oscillation.

    Chord lengths of a circle sampled at 2 pi n / N are 2 R sin(pi/N), so capping
    R and the altitude amplitude at V dt / (2 sin(pi/N)) keeps every slot within
    the speed limits by construction.
    """
    fl, N, dt = scenario.flight, scenario.slots, scenario.dt
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xC1C1E]))
    x0, x1, y0, y1 = scenario.deployment_area()
    cx, cy = rng.uniform(x0, x1), rng.uniform(y0, y1)
    chord = 2 * math.sin(math.pi / N) if N > 1 else 1.0
    r_max = min(fl.V_xy_max * dt / chord, fl.H_min * math.tan(fl.obs_angle)) * (1 - INIT_MARGIN)
    radius = rng.uniform(0.2, 1.0) * r_max
    amp_max = min(fl.V_z_max * dt / chord * (1 - INIT_MARGIN), (fl.H_max - fl.H_min) / 2)
    amp = rng.uniform(0.0, 1.0) * amp_max
    zc = rng.uniform(fl.H_min + amp, fl.H_max - amp)
    phase = rng.uniform(0, 2 * math.pi)
    phi = 2 * math.pi * np.arange(N + 1) / N
    h = np.column_stack([cx + radius * np.sin(phi + phase), cy + radius * np.cos(phi + phase)])
    z = np.clip(zc + amp * np.sin(phi), fl.H_min, fl.H_max)
    h[-1], z[-1] = h[0], z[0]
    traj = Trajectory(h, z)
    assert not flight_violations(traj, scenario)
    return traj


def circle_flight_design(scenario, seed: int | None = None, *, eps: float = 1e-3, max_iter: int = 50,
                         tol: float | None = None) -> DynamicDesign:
    seed = scenario.rng_seed if seed is None else seed
    traj = random_circle(scenario, seed)
    sols, traces = slot_beamforming(scenario, traj, eps=eps, max_iter=max_iter, tol=tol)
    obj = RateObjective(scenario, sols).value(traj)
    return finish_design(scenario, traj, sols, obj, inner=[traces],
                         outer=[{"iteration": 1, "objective_beamforming": obj, "objective": obj,
                                 "accepted_steps": 0}],
                         kind=BaselineKind.CIRCLE_FLIGHT.value)


# ---------------------------------------------------------------------------

def solve_baseline(kind, scenario, *, grid=None, seed: int | None = None, jobs: int = 1,
                   eps: float = 1e-3, max_iter: int = 50, tol: float | None = None,
                   los_only: bool = False) -> StaticDesign | DynamicDesign:
    kind = BaselineKind(kind)
    if kind is BaselineKind.COMM_ONLY_STATIC:
        return solve_static(scenario, grid, eps=eps, max_iter=max_iter, tol=tol, jobs=jobs,
                            los_only=los_only, mode="comm")
    if kind is BaselineKind.SAR_ONLY_STATIC:
        return solve_static(scenario, grid, tol=tol, jobs=jobs, los_only=los_only, mode="sar")
    if kind is BaselineKind.COMM_ONLY_DYNAMIC:
        return solve_dynamic(scenario, eps=eps, max_iter=max_iter, tol=tol, sensing=False,
                             kind=kind.value)
    if kind is BaselineKind.SAR_ONLY_DYNAMIC:
        return solve_sar_only_dynamic(scenario, eps=eps, tol=tol)
    if kind is BaselineKind.ISOTROPIC_DYNAMIC:
        return solve_isotropic_dynamic(scenario, eps=eps, max_iter=max_iter, tol=tol)
    return circle_flight_design(scenario, seed, eps=eps, max_iter=max_iter, tol=tol)
