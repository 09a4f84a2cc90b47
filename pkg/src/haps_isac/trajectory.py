"""Dynamic design: closed trajectory plus per-slot beamforming.

The trajectory step holds every slot's covariances fixed.  Each user's rate
and each target's beampattern gain are then smooth functions of the waypoint
through the cosine c = z/d in the steering phase ramp.  Writing

    a^H W a = tr W + 2 sum_{i<j} |W_ij| cos(theta_ij + pi (j-i) c)

gives closed-form gradients.  Their first-order expansions feed a convex
program (linear objective, convex-quadratic beampattern floors, flight
limits) solved inside a trust region that is halved whenever the true
objective fails to improve.

Inside the trajectory program all lengths are in kilometres.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import conic
from .aero import DENSITY_FIT, EnergyLedger, air_density, energy_ledger, propulsion_bound_coefficient
from .beamforming import (ConvergenceTrace, InfeasibleError, SolverFailure, extract_rank_one,
                          slot_problem, solve_beamforming)
from .channel import Placement3D, user_channels
from .comm import BeamformingSolution, weighted_sum_rate
from .conic import Affine, ConicProgram, ConvexQuadratic, Linear, SecondOrderCone, VectorVar

log = logging.getLogger(__name__)

LOG2E = 1.0 / math.log(2.0)
KM = 1e3
NORM_MARGIN = 1e-7  # relative shrink of the flight-limit radii inside the program
INIT_MARGIN = 1e-6  # initial trajectories sit strictly inside the program's limits


@dataclass
class Trajectory:
    """Waypoints n = 0..N; slot n (1..N) is served from waypoint n."""

    h: np.ndarray  # (N+1, 2) metres
    z: np.ndarray  # (N+1,) metres

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=float).reshape(-1, 2)
        self.z = np.asarray(self.z, dtype=float).reshape(-1)
        if len(self.h) != len(self.z):
            raise ValueError("h and z lengths differ")

    @property
    def N(self) -> int:
        return len(self.z) - 1

    def point(self, n: int) -> Placement3D:
        return Placement3D(float(self.h[n, 0]), float(self.h[n, 1]), float(self.z[n]))

    def slot_points(self) -> list[Placement3D]:
        return [self.point(n) for n in range(1, self.N + 1)]

    def copy(self) -> "Trajectory":
        return Trajectory(self.h.copy(), self.z.copy())

    def rows(self) -> list[dict]:
        return [{"n": n, "x": float(self.h[n, 0]), "y": float(self.h[n, 1]), "z": float(self.z[n])}
                for n in range(self.N + 1)]

    def to_dict(self) -> dict:
        return {"h": self.h.tolist(), "z": self.z.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Trajectory":
        return cls(np.array(d["h"]), np.array(d["z"]))


def flight_violations(traj: Trajectory, scenario, rtol: float = 1e-9) -> list[str]:
    """Closure is checked exactly, altitude bounds and speeds to ``rtol``."""
    fl, dt = scenario.flight, scenario.dt
    bad = []
    if not (np.array_equal(traj.h[0], traj.h[-1]) and traj.z[0] == traj.z[-1]):
        bad.append("closure")
    if np.any(traj.z < fl.H_min) or np.any(traj.z > fl.H_max):
        bad.append("altitude")
    step_xy = np.linalg.norm(np.diff(traj.h, axis=0), axis=1)
    if np.any(step_xy > fl.V_xy_max * dt * (1 + rtol)):
        bad.append("speed_xy")
    if np.any(np.abs(np.diff(traj.z)) > fl.V_z_max * dt * (1 + rtol)):
        bad.append("speed_z")
    return bad


def circular_init(scenario, center=None, altitude: float | None = None) -> Trajectory:
    """Circle of radius z tan(alpha) at constant altitude, shrunk to respect V_xy_max.

    The platform makes one revolution over the N slots so waypoint N closes
    onto waypoint 0.
    """
    fl, N, dt = scenario.flight, scenario.slots, scenario.dt
    if not 0 < fl.obs_angle < math.pi / 2:
        raise ValueError("observation angle must lie in (0, pi/2)")
    z = fl.H_min if altitude is None else altitude
    if center is None:
        x0, x1, y0, y1 = scenario.deployment_area()
        center = ((x0 + x1) / 2, (y0 + y1) / 2)
    radius = z * math.tan(fl.obs_angle)
    chord = 2 * math.sin(math.pi / N) if N > 1 else 0.0
    if chord * radius > fl.V_xy_max * dt:
        radius = fl.V_xy_max * dt / chord * (1 - INIT_MARGIN)
    phi = 2 * math.pi * np.arange(N + 1) / N
    h = np.column_stack([center[0] + radius * np.sin(phi), center[1] + radius * np.cos(phi)])
    h[-1] = h[0]
    return Trajectory(h, np.full(N + 1, float(z)))


# ---------------------------------------------------------------------------
# cosine-decomposed quadratic forms and their gradients

class PairTerms(NamedTuple):
    trace: float
    mag: np.ndarray  # |W_ij| for i < j
    phase: np.ndarray  # arg W_ij
    lag: np.ndarray  # j - i


def pair_terms(W: np.ndarray) -> PairTerms:
    i, j = np.triu_indices(W.shape[0], k=1)
    Wij = W[i, j]
    return PairTerms(float(np.real(np.trace(W))), np.abs(Wij), np.angle(Wij), (j - i).astype(float))


def _geometry(point, ground):
    dh = np.array([point[0] - ground[0], point[1] - ground[1]])
    z = float(point[2])
    r2 = float(dh @ dh)
    d = math.sqrt(r2 + z * z)
    return dh, z, r2, d


def quad_form(terms: PairTerms, point, ground) -> float:
    """f(W, d) = tr W + 2 sum |W_ij| cos(theta_ij + pi (j-i) z/d)."""
    _, z, _, d = _geometry(point, ground)
    return terms.trace + 2 * float(np.sum(terms.mag * np.cos(terms.phase + math.pi * terms.lag * z / d)))


def quad_form_grad(terms: PairTerms, point, ground) -> tuple[np.ndarray, float]:
    """(df/dh, df/dz) of ``quad_form``.

    df/dh =  sum 2 pi |W_ij| sin(.) (j-i) z (h-m) / d^3
    df/dz = -sum 2 pi |W_ij| sin(.) (j-i) ||h-m||^2 / d^3
    """
    dh, z, r2, d = _geometry(point, ground)
    s = float(np.sum(2 * math.pi * terms.mag * np.sin(terms.phase + math.pi * terms.lag * z / d)
                     * terms.lag))
    return s * z * dh / d ** 3, -s * r2 / d ** 3


def exact_rate_terms(point, W: np.ndarray, Rs: np.ndarray, user) -> tuple[np.ndarray, float]:
    """Per-stream f(W_p, d) values and g(Rs, d) towards ``user``."""
    f = np.array([quad_form(pair_terms(Wp), point, user) for Wp in W])
    return f, quad_form(pair_terms(Rs), point, user)


class RateTaylor(NamedTuple):
    value: float  # R_k at the expansion point
    v: np.ndarray  # dR_k/dh (2,), per metre
    b: float  # dR_k/dz, per metre
    eta: float
    mu: float


def rate_taylor(point, W: np.ndarray, Rs: np.ndarray, user, k: int, noise: float,
                ref_gain: float) -> RateTaylor:
    """First-order expansion of R_k = log2(eta) - log2(mu) in the waypoint.

    eta = sum_p f(W_p) + g(Rs) + sigma^2 d^2 / rho0, mu drops the p = k term.
    """
    dh, z, r2, d = _geometry(point, user)
    f = np.empty(len(W))
    fh = np.empty((len(W), 2))
    fz = np.empty(len(W))
    for p, Wp in enumerate(W):
        t = pair_terms(Wp)
        f[p] = quad_form(t, point, user)
        fh[p], fz[p] = quad_form_grad(t, point, user)
    tR = pair_terms(Rs)
    g = quad_form(tR, point, user)
    gh, gz = quad_form_grad(tR, point, user)
    nz = noise * (r2 + z * z) / ref_gain
    nh, nzz = 2 * noise * dh / ref_gain, 2 * noise * z / ref_gain
    eta = f.sum() + g + nz
    mu = eta - f[k]
    v = LOG2E * ((fh.sum(axis=0) + gh + nh) / eta - (fh.sum(axis=0) - fh[k] + gh + nh) / mu)
    b = LOG2E * ((fz.sum() + gz + nzz) / eta - (fz.sum() - fz[k] + gz + nzz) / mu)
    return RateTaylor(math.log2(eta) - math.log2(mu), v, float(b), float(eta), float(mu))


class BeampatternTaylor(NamedTuple):
    xi: float  # a^H H a at the expansion point
    nu: np.ndarray  # gradient in h, per metre
    zeta: float  # gradient in z, per metre


def beampattern_taylor(point, H: np.ndarray, target) -> BeampatternTaylor:
    t = pair_terms(H)
    nu, zeta = quad_form_grad(t, point, target)
    return BeampatternTaylor(quad_form(t, point, target), nu, float(zeta))


# ---------------------------------------------------------------------------
# trajectory objectives
#
# An objective model maps a trajectory to (1/N) sum_n min_j piece_{n,j}, where
# each piece is smooth in waypoint n.  Linearizing returns, per slot, a list of
# (value, grad_h, grad_z) triples.

class RateObjective:
    """Average weighted sum-rate with each slot's covariances held fixed (LOS)."""

    def __init__(self, scenario, solutions):
        self.s = scenario
        self.W = [sol.W for sol in solutions]
        self.Rs = [sol.Rs for sol in solutions]

    def value(self, traj: Trajectory) -> float:
        s = self.s
        chans = [user_channels(s, p, los_only=True) for p in traj.slot_points()]
        sols = [BeamformingSolution(W, Rs) for W, Rs in zip(self.W, self.Rs)]
        return weighted_sum_rate(sols, chans, s.beta, s.noise)

    def pieces(self, traj: Trajectory):
        s = self.s
        out = []
        for n, p in enumerate(traj.slot_points()):
            val, gh, gz = 0.0, np.zeros(2), 0.0
            for k, m in enumerate(s.users):
                t = rate_taylor(p, self.W[n], self.Rs[n], m, k, s.noise[k], s.ref_gain)
                val += s.beta[k] * t.value
                gh = gh + s.beta[k] * t.v
                gz += s.beta[k] * t.b
            out.append([(val, gh, gz)])
        return out


class SensingObjective:
    """Average over slots of min_q a_q^H Rs a_q / d_q^2 (the sensing-only design)."""

    SCALE = 1e8  # W/m^2 -> O(1) units for the program

    def __init__(self, scenario, solutions):
        self.s = scenario
        self.H = [sol.total_covariance for sol in solutions]

    def slot_values(self, traj: Trajectory) -> np.ndarray:
        out = []
        for n, p in enumerate(traj.slot_points()):
            vals = []
            for t in self.s.targets:
                bt = beampattern_taylor(p, self.H[n], t)
                d2 = (p[0] - t[0]) ** 2 + (p[1] - t[1]) ** 2 + p[2] ** 2
                vals.append(bt.xi / d2)
            out.append(min(vals))
        return np.array(out)

    def value(self, traj: Trajectory) -> float:
        return float(np.mean(self.slot_values(traj))) * self.SCALE

    def pieces(self, traj: Trajectory):
        out = []
        for n, p in enumerate(traj.slot_points()):
            slot = []
            for t in self.s.targets:
                bt = beampattern_taylor(p, self.H[n], t)
                dh = np.array([p[0] - t[0], p[1] - t[1]])
                d2 = float(dh @ dh) + p[2] ** 2
                val = bt.xi / d2
                gh = bt.nu / d2 - 2 * bt.xi * dh / d2 ** 2
                gz = bt.zeta / d2 - 2 * bt.xi * p[2] / d2 ** 2
                slot.append((val * self.SCALE, gh * self.SCALE, gz * self.SCALE))
            out.append(slot)
        return out


def beampattern_ok(scenario, traj: Trajectory, solutions, rtol: float = 1e-6) -> bool:
    gamma = scenario.bp_threshold
    if gamma <= 0:
        return True
    for n, p in enumerate(traj.slot_points()):
        H = solutions[n].total_covariance
        for t in scenario.targets:
            d2 = (p[0] - t[0]) ** 2 + (p[1] - t[1]) ** 2 + p[2] ** 2
            if beampattern_taylor(p, H, t).xi < gamma * d2 * (1 - rtol):
                return False
    return True


# ---------------------------------------------------------------------------
# convex trajectory subproblem

def _idx(N: int, n: int, comp: int) -> int:
    """Position of component comp (0=x, 1=y, 2=z) of waypoint n in the stacked vector."""
    return comp * (N + 1) + n


def _sel(N: int, rows: list[tuple[int, int, float]]) -> np.ndarray:
    A = np.zeros((len(rows), 3 * (N + 1)))
    for r, (n, comp, c) in enumerate(rows):
        A[r, _idx(N, n, comp)] = c
    return A


def _coord(N: int, n: int, comp: int, c: float = 1.0) -> Affine:
    e = np.zeros(3 * (N + 1))
    e[_idx(N, n, comp)] = c
    return Affine.coef("x", e)


def build_traj_subproblem(scenario, solutions, expansion: Trajectory, radius: float,
                          objective=None, sensing: bool = True) -> ConicProgram:
    """Convex program in the stacked waypoints x = [x_0..x_N, y_0..y_N, z_0..z_N] (km).

    ``radius`` is the trust radius in metres.  Constraint labels:
    beampattern (Q*N), trust (2N), altitude (N+1), speed_xy (N), speed_z (N),
    energy (1, only with an energy budget) and closure (3).
    """
    s, fl, dt = scenario, scenario.flight, scenario.dt
    N = expansion.N
    obj = RateObjective(s, solutions) if objective is None else objective
    pieces = obj.pieces(expansion)
    r_km = radius / KM
    x0 = np.concatenate([expansion.h[:, 0], expansion.h[:, 1], expansion.z]) / KM

    def lin(n, val, gh, gz) -> Affine:
        # value + grad . (waypoint - expansion), gradients converted to per km
        a = Affine(val - KM * (gh[0] * x0[_idx(N, n, 0)] + gh[1] * x0[_idx(N, n, 1)]
                               + gz * x0[_idx(N, n, 2)]))
        return (a + _coord(N, n, 0, KM * gh[0]) + _coord(N, n, 1, KM * gh[1])
                + _coord(N, n, 2, KM * gz))

    vec_vars = [VectorVar("x", 3 * (N + 1))]
    cons = []
    multi = any(len(p) > 1 for p in pieces)
    if multi:
        vec_vars.append(VectorVar("t", N))
        objective_expr = Affine.coef("t", np.full(N, 1.0 / N))
        for n, slot in enumerate(pieces, start=1):
            e = np.zeros(N)
            e[n - 1] = 1.0
            for val, gh, gz in slot:
                cons.append(Linear(lin(n, val, gh, gz) - Affine.coef("t", e), lo=0.0, label="epigraph"))
    else:
        objective_expr = conic.total(lin(n, *slot[0]) for n, slot in enumerate(pieces, start=1)) * (1.0 / N)

    gamma = s.bp_threshold
    if sensing and gamma > 0:
        g = math.sqrt(gamma * KM ** 2)  # Gamma d^2 with d in km
        for n in range(1, N + 1):
            p = expansion.point(n)
            H = solutions[n - 1].total_covariance
            for t in s.targets:
                bt = beampattern_taylor(p, H, t)
                A = _sel(N, [(n, 0, g), (n, 1, g), (n, 2, g)])
                b = -g * np.array([t[0] / KM, t[1] / KM, 0.0])
                cons.append(ConvexQuadratic("x", A, b, lin(n, bt.xi, bt.nu, bt.zeta),
                                            label="beampattern"))

    for n in range(1, N + 1):
        A = _sel(N, [(n, 0, 1.0), (n, 1, 1.0)])
        cons.append(SecondOrderCone("x", A, -x0[[_idx(N, n, 0), _idx(N, n, 1)]], Affine(r_km),
                                    label="trust"))
        zc = x0[_idx(N, n, 2)]
        cons.append(Linear(_coord(N, n, 2), lo=zc - r_km, hi=zc + r_km, label="trust"))
    for n in range(N + 1):
        cons.append(Linear(_coord(N, n, 2), lo=fl.H_min / KM, hi=fl.H_max / KM, label="altitude"))
    vxy = fl.V_xy_max * dt / KM * (1 - NORM_MARGIN)
    vz = fl.V_z_max * dt / KM * (1 - NORM_MARGIN)
    for n in range(1, N + 1):
        A = np.vstack([_sel(N, [(n, 0, 1.0)]) - _sel(N, [(n - 1, 0, 1.0)]),
                       _sel(N, [(n, 1, 1.0)]) - _sel(N, [(n - 1, 1, 1.0)])])
        cons.append(SecondOrderCone("x", A, np.zeros(2), Affine(vxy), label="speed_xy"))
        cons.append(Linear(_coord(N, n, 2) - _coord(N, n - 1, 2), lo=-vz, hi=vz, label="speed_z"))
    if s.e_start is not None:
        cons.append(_energy_constraint(s, N))
    for comp in range(3):
        cons.append(Linear(_coord(N, N, comp) - _coord(N, 0, comp), lo=0.0, hi=0.0, label="closure"))
    return ConicProgram(vec_vars=tuple(vec_vars), linear=objective_expr, constraints=tuple(cons))


def _energy_constraint(s, N: int) -> ConvexQuadratic:
    """sum_n (P_max + c rho(z_n)) dt <= E, with rho quadratic in z (km): a z^2 + b z + c0 (x1e-3)."""
    a, b, c0 = DENSITY_FIT
    c = propulsion_bound_coefficient(s) * 1e-3
    budget = (s.e_start / s.dt - N * s.power_max) / c  # sum_n (a z^2 + b z + c0) <= budget
    A = _sel(N, [(n, 2, math.sqrt(a)) for n in range(1, N + 1)])
    rhs = Affine(budget - N * c0) - conic.total(_coord(N, n, 2, b) for n in range(1, N + 1))
    return ConvexQuadratic("x", A, np.zeros(N), rhs, label="energy")


def _snap(values: np.ndarray, scenario, N: int) -> Trajectory:
    x = values * KM
    h = np.column_stack([x[:N + 1], x[N + 1:2 * (N + 1)]])
    z = np.clip(x[2 * (N + 1):], scenario.flight.H_min, scenario.flight.H_max)
    h[0], z[0] = h[N], z[N]
    return Trajectory(h, z)


def energy_bound_ok(scenario, traj: Trajectory) -> bool:
    if scenario.e_start is None:
        return True
    rho = air_density(traj.z[1:])
    total = np.sum(scenario.power_max + propulsion_bound_coefficient(scenario) * rho) * scenario.dt
    return bool(total <= scenario.e_start * (1 + 1e-9))


@dataclass
class TrustRegionTrace:
    objectives: list = field(default_factory=list)  # accepted-step true objectives
    radii: list = field(default_factory=list)
    events: list = field(default_factory=list)  # accepted / rejected / infeasible

    def rows(self) -> list[dict]:
        return [{"step": i, "radius": r, "event": e} for i, (r, e) in enumerate(zip(self.radii, self.events))]


def solve_trajectory(scenario, solutions, init: Trajectory, radius0: float | None = None,
                     eps: float = 1.0, objective=None, sensing: bool = True,
                     max_steps: int = 50, tol: float | None = None,
                     gain_rtol: float = 1e-9) -> tuple[Trajectory, TrustRegionTrace]:
    """Trust-region SCA over waypoints with fixed per-slot covariances.

    A step is accepted when the true objective strictly improves and the
    true beampattern floors hold; otherwise the radius is halved.  Returns
    when the radius drops below ``eps`` metres or after ``max_steps`` accepted
    steps.
    """
    obj = RateObjective(scenario, solutions) if objective is None else objective
    radius = scenario.flight.V_xy_max * scenario.dt / 2 if radius0 is None else radius0
    traj = init.copy()
    best = obj.value(traj)
    trace = TrustRegionTrace([best], [], [])
    accepted = 0
    while radius >= eps and accepted < max_steps:
        prog = build_traj_subproblem(scenario, solutions, traj, radius, obj, sensing)
        res = conic.solve(prog, tol)
        trace.radii.append(radius)
        if res.status not in ("optimal", "inaccurate"):
            trace.events.append(res.status)
            radius /= 2
            continue
        cand = _snap(res.values["x"], scenario, traj.N)
        ok = (not flight_violations(cand, scenario)
              and (not sensing or beampattern_ok(scenario, cand, solutions))
              and energy_bound_ok(scenario, cand))
        new = obj.value(cand) if ok else -math.inf
        if ok and new > best + gain_rtol * max(abs(best), 1.0):
            traj, best = cand, new
            trace.objectives.append(best)
            trace.events.append("accepted")
            accepted += 1
        else:
            trace.events.append("rejected")
            radius /= 2
    return traj, trace


# ---------------------------------------------------------------------------
# alternating optimization

@dataclass
class DynamicDesign:
    trajectory: Trajectory
    solutions: list
    objective: float
    outer: list = field(default_factory=list)  # dict rows per outer iteration
    inner: list = field(default_factory=list)  # per outer iteration: per-slot SCA traces
    tr_traces: list = field(default_factory=list)
    energy: EnergyLedger | None = None
    status: str = "optimal"
    kind: str = "isac"

    @property
    def iterations(self) -> int:
        return len(self.outer)


def slot_beamforming(scenario, traj: Trajectory, warm=None, *, eps=1e-3, max_iter=50, tol=None,
                     sensing: bool = True):
    """Fixed-waypoint beamforming in every slot (LOS channels, SNR floor at H_max)."""
    sols, traces = [], []
    for n, p in enumerate(traj.slot_points()):
        prob = slot_problem(scenario, p, los_only=True, snr_altitude=scenario.flight.H_max,
                            sensing=sensing)
        init = None
        if warm is not None:
            init = BeamformingSolution(warm[n].W.copy(), warm[n].Rs.copy())
        sol, tr = solve_beamforming(prob, init, eps=eps, max_iter=max_iter, tol=tol)
        sols.append(extract_rank_one(sol, prob.channels, prob, seed=scenario.rng_seed + n))
        traces.append(tr)
    return sols, traces


def average_power(solutions) -> np.ndarray:
    return np.array([s.power for s in solutions])


def finish_design(scenario, traj, sols, obj_value, **kw) -> DynamicDesign:
    ledger = energy_ledger(traj, average_power(sols), scenario)
    return DynamicDesign(traj, sols, obj_value, energy=ledger, **kw)


def solve_dynamic(scenario, init: Trajectory | None = None, *, eps: float = 1e-3,
                  max_outer: int = 10, max_iter: int = 50, tol: float | None = None,
                  tr_eps: float = 1.0, max_steps: int = 50, sensing: bool = True,
                  kind: str = "isac") -> DynamicDesign:
    """Alternate per-slot beamforming and trust-region trajectory steps.

    Stops when the fractional increase of the average weighted sum-rate over
    one outer iteration falls below ``eps``.
    """
    traj = circular_init(scenario) if init is None else init.copy()
    bad = flight_violations(traj, scenario)
    if bad:
        raise InfeasibleError(bad[0], "initial trajectory violates the flight limits")
    sols, outer, inner, trs = None, [], [], []
    prev = None
    t0 = time.perf_counter()
    for it in range(max_outer):
        sols, traces = slot_beamforming(scenario, traj, sols, eps=eps, max_iter=max_iter, tol=tol,
                                        sensing=sensing)
        inner.append(traces)
        obj_bf = RateObjective(scenario, sols).value(traj)
        traj, tr = solve_trajectory(scenario, sols, traj, eps=tr_eps, sensing=sensing,
                                    max_steps=max_steps, tol=tol)
        trs.append(tr)
        obj = tr.objectives[-1]
        outer.append({"iteration": it + 1, "objective_beamforming": obj_bf, "objective": obj,
                      "accepted_steps": tr.events.count("accepted"),
                      "time": round(time.perf_counter() - t0, 6)})
        log.info("outer %d: %.6f -> %.6f", it + 1, obj_bf, obj)
        if prev is not None and (obj - prev) / max(abs(prev), 1e-12) < eps:
            break
        prev = obj
    return finish_design(scenario, traj, sols, obj, outer=outer, inner=inner, tr_traces=trs,
                         kind=kind)


def audit_dynamic(scenario, design: DynamicDesign, sensing: bool = True) -> list[str]:
    """Independent re-verification of every trajectory and per-slot constraint."""
    bad = list(flight_violations(design.trajectory, scenario))
    for n, p in enumerate(design.trajectory.slot_points()):
        prob = slot_problem(scenario, p, los_only=True, snr_altitude=scenario.flight.H_max,
                            sensing=sensing)
        bad += [f"{v}@{n + 1}" for v in prob.violations(design.solutions[n])]
    if design.energy is not None and not design.energy.feasible:
        bad.append("energy")
    return bad
