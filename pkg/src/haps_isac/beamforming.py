"""Fixed-placement beamforming by SCA over semidefinite relaxations.

At a fixed platform position the weighted sum-rate is a difference of two
log terms per user.  The interference log is linearized at the current
covariances, the rank-one constraints are dropped, and the resulting concave
program is solved repeatedly until the fractional objective gain is small.
Rank-one beamformers are then recovered with a power-preserving
reconstruction that leaves every SINR and the total covariance unchanged.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import conic
from .channel import distance, steering_matrix, user_channels
from .comm import BeamformingSolution, received_powers, weighted_sum_rate
from .conic import Affine, ConicProgram, HermitianVar, Linear, LogTerm, VectorVar
from .radar import snr_power_floor

log = logging.getLogger(__name__)

LOG2E = 1.0 / math.log(2.0)


class InfeasibleError(RuntimeError):
    """A constraint class cannot be met; ``constraint`` names it."""

    def __init__(self, constraint: str, detail: str = ""):
        self.constraint = constraint
        super().__init__(f"infeasible ({constraint})" + (f": {detail}" if detail else ""))


class SolverFailure(RuntimeError):
    def __init__(self, message: str, residuals: dict | None = None):
        self.residuals = residuals or {}
        super().__init__(message)


@dataclass
class SlotProblem:
    """Everything the per-slot beamforming problem needs at one placement."""

    channels: np.ndarray  # (K, M)
    noise: np.ndarray  # (K,)
    beta: np.ndarray  # (K,)
    target_steering: np.ndarray  # (Q, M)
    target_d2: np.ndarray  # (Q,)
    gamma: float
    power_max: float
    power_floor: float = 0.0
    sensing: bool = True

    @property
    def K(self) -> int:
        return self.channels.shape[0]

    @property
    def M(self) -> int:
        return self.channels.shape[1]

    @property
    def Q(self) -> int:
        return self.target_steering.shape[0]

    @property
    def bp_required(self) -> np.ndarray:
        return self.gamma * self.target_d2

    def beampatterns(self, H: np.ndarray) -> np.ndarray:
        A = self.target_steering
        return np.real(np.einsum("qm,mn,qn->q", A.conj(), H, A))

    def violations(self, sol: BeamformingSolution, rtol: float = 1e-6) -> list[str]:
        """Constraint classes violated by ``sol`` beyond ``rtol`` relative."""
        bad = []
        p = sol.power
        if p > self.power_max * (1 + rtol):
            bad.append("power")
        if self.sensing:
            if p < self.power_floor * (1 - rtol):
                bad.append("snr")
            if np.any(self.beampatterns(sol.total_covariance) < self.bp_required * (1 - rtol)):
                bad.append("beampattern")
        return bad

    def objective(self, sol: BeamformingSolution) -> float:
        return weighted_sum_rate(sol, self.channels, self.beta, self.noise)


def slot_problem(scenario, placement, channels=None, *, slot: int = 0, los_only: bool = False,
                 snr_altitude: float | None = None, sensing: bool = True,
                 power_max: float | None = None) -> SlotProblem:
    """Assemble the per-slot problem.

    ``snr_altitude`` is the altitude used in the SAR SNR floor: the placement
    altitude for the quasi-stationary design, H_max for trajectory slots.
    """
    if channels is None:
        channels = user_channels(scenario, placement, slot=slot, los_only=los_only)
    tgt = scenario.target_xy
    d2 = np.array([distance(placement, t) ** 2 for t in tgt])
    z_snr = placement[2] if snr_altitude is None else snr_altitude
    return SlotProblem(
        channels=np.asarray(channels),
        noise=scenario.noise,
        beta=scenario.beta,
        target_steering=steering_matrix(placement, tgt, scenario.M),
        target_d2=d2,
        gamma=scenario.bp_threshold,
        power_max=scenario.power_max if power_max is None else power_max,
        power_floor=snr_power_floor(scenario, z_snr) if sensing else 0.0,
        sensing=sensing,
    )


# ---------------------------------------------------------------------------
# surrogate

@dataclass
class SurrogatePoint:
    W0: np.ndarray
    Rs0: np.ndarray
    a_bar: np.ndarray  # log2 of interference-plus-noise at the expansion point
    B_bar: np.ndarray  # (K, M, M) gradient of that log w.r.t. the covariances


def build_surrogate(channels, noise, W0, Rs0) -> SurrogatePoint:
    G = np.asarray(channels)
    sol = BeamformingSolution(np.asarray(W0), np.asarray(Rs0))
    _, interference = received_powers(G, sol)
    ipn = interference + np.asarray(noise)
    B = LOG2E * np.einsum("km,kn->kmn", G, G.conj()) / ipn[:, None, None]
    return SurrogatePoint(sol.W, sol.Rs, np.log2(ipn), B)


def surrogate_rates(channels, noise, point: SurrogatePoint, W, Rs) -> np.ndarray:
    """Concave lower bound of every user's rate at covariances (W, Rs)."""
    G = np.asarray(channels)
    sol = BeamformingSolution(np.asarray(W), np.asarray(Rs))
    signal, interference = received_powers(G, sol)
    out = np.empty(G.shape[0])
    for k in range(G.shape[0]):
        lin = point.a_bar[k]
        for p in range(G.shape[0]):
            if p != k:
                lin += np.real(np.sum(point.B_bar[k] * (W[p] - point.W0[p]).T))
        lin += np.real(np.sum(point.B_bar[k] * (Rs - point.Rs0).T))
        out[k] = np.log2(signal[k] + interference[k] + noise[k]) - lin
    return out


def _wname(k: int) -> str:
    return f"W{k}"


def build_sdr(problem: SlotProblem, point: SurrogatePoint) -> ConicProgram:
    """Relaxed, surrogate-objective program for one placement.

    Constraints: Q beampattern floors, the SAR SNR power floor, the power cap,
    and K+1 PSD blocks (K without a sensing covariance).
    """
    K, M = problem.K, problem.M
    G = problem.channels
    hv = [HermitianVar(_wname(k), M) for k in range(K)]
    if problem.sensing:
        hv.append(HermitianVar("Rs", M))
    power = conic.total(Affine.trace(v.name, dim=M) for v in hv)

    log_terms, linear = [], Affine()
    for k in range(K):
        # received power normalized by noise keeps the log argument O(1)
        Gk = np.outer(G[k], G[k].conj()) / problem.noise[k]
        expr = conic.total(Affine.trace(v.name, Gk) for v in hv) + 1.0
        log_terms.append(LogTerm(problem.beta[k], expr))
        lin = Affine(math.log2(problem.noise[k]) - point.a_bar[k])
        Bk = point.B_bar[k]
        for p in range(K):
            if p != k:
                lin = lin - Affine.trace(_wname(p), Bk) + float(np.real(np.sum(Bk * point.W0[p].T)))
        if problem.sensing:
            lin = lin - Affine.trace("Rs", Bk) + float(np.real(np.sum(Bk * point.Rs0.T)))
        linear = linear + problem.beta[k] * lin

    cons = []
    if problem.sensing:
        for q in range(problem.Q):
            a = problem.target_steering[q]
            A = np.outer(a, a.conj())
            cons.append(Linear(conic.total(Affine.trace(v.name, A) for v in hv),
                               lo=float(problem.bp_required[q]), label="beampattern"))
        cons.append(Linear(power, lo=problem.power_floor, label="snr"))
    cons.append(Linear(power, hi=problem.power_max, label="power"))
    return ConicProgram(herm_vars=tuple(hv), log_terms=tuple(log_terms), linear=linear,
                        constraints=tuple(cons))


def _solution_from(values: dict, problem: SlotProblem) -> BeamformingSolution:
    W = np.array([values[_wname(k)] for k in range(problem.K)])
    Rs = values["Rs"] if problem.sensing else np.zeros((problem.M, problem.M), complex)
    return BeamformingSolution(W, Rs)


# ---------------------------------------------------------------------------
# initialization and feasibility repair

def initial_point(problem: SlotProblem, rho: float = 0.5) -> BeamformingSolution:
    K, M, P = problem.K, problem.M, problem.power_max
    W = np.zeros((K, M, M), complex)
    for k in range(K):
        g = problem.channels[k]
        W[k] = rho * P / (K * M) * np.outer(g, g.conj()) / np.vdot(g, g).real
    share = (1 - rho) if problem.sensing else 0.0
    return BeamformingSolution(W, share * P / M * np.eye(M, dtype=complex))


def check_power_budget(problem: SlotProblem) -> None:
    if problem.sensing and problem.power_floor > problem.power_max * (1 + 1e-9):
        raise InfeasibleError("snr", f"SNR floor needs {problem.power_floor:.4g} W "
                                     f"> P_max {problem.power_max:.4g} W")
    if problem.sensing and problem.Q and np.max(problem.bp_required) > problem.M * problem.power_max:
        raise InfeasibleError("beampattern", "threshold exceeds M * P_max at some target")


def repair(problem: SlotProblem, init: BeamformingSolution, tol=None) -> BeamformingSolution:
    """Feasible starting point maximizing the worst normalized beampattern slack."""
    K, M = problem.K, problem.M
    hv = [HermitianVar(_wname(k), M) for k in range(K)] + [HermitianVar("Rs", M)]
    power = conic.total(Affine.trace(v.name, dim=M) for v in hv)
    cons = []
    for q in range(problem.Q):
        a = problem.target_steering[q]
        A = np.outer(a, a.conj()) / max(problem.bp_required[q], 1e-300)
        cons.append(Linear(conic.total(Affine.trace(v.name, A) for v in hv)
                           - Affine.coef("t", [1.0]), lo=1.0, label="beampattern"))
    cons.append(Linear(power, lo=problem.power_floor, label="snr"))
    cons.append(Linear(power, hi=problem.power_max, label="power"))
    # a small reward on user power keeps the SCA start away from W = 0
    prog = ConicProgram(herm_vars=tuple(hv), vec_vars=(VectorVar("t", 1),),
                        linear=Affine.coef("t", [1.0]) + conic.total(
                            1e-3 / problem.power_max * Affine.trace(_wname(k), dim=M)
                            for k in range(K)),
                        constraints=tuple(cons))
    res = conic.solve(prog, tol)
    if res.status == "infeasible":
        raise InfeasibleError("beampattern", "no covariance meets every target floor")
    if res.status not in ("optimal", "inaccurate"):
        raise SolverFailure(f"feasibility repair failed: {res.message}", res.residuals)
    if res.values["t"][0] < -1e-7:
        raise InfeasibleError("beampattern",
                              f"best worst-case normalized slack {res.values['t'][0]:.3g}")
    sol = BeamformingSolution(np.array([res.values[_wname(k)] for k in range(K)]),
                              res.values["Rs"])
    return sol


# ---------------------------------------------------------------------------
# SCA loop

@dataclass
class ConvergenceTrace:
    objectives: list = field(default_factory=list)
    statuses: list = field(default_factory=list)
    times: list = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return max(len(self.objectives) - 1, 0)

    def is_monotone(self, slack: float = 1e-6) -> bool:
        obj = np.asarray(self.objectives)
        return bool(np.all(np.diff(obj) >= -slack))

    def rows(self) -> list[dict]:
        return [{"iteration": i, "objective": o, "status": s, "time": t}
                for i, (o, s, t) in enumerate(zip(self.objectives, self.statuses, self.times))]


ACCEPT_RTOL = 1e-6


def _checked(res, what: str):
    if res.status == "infeasible":
        raise InfeasibleError("beampattern" if "sdr" in what else what, res.message)
    if res.status == "failed":
        raise SolverFailure(f"{what}: solver failed ({res.message})", res.residuals)
    if res.status == "inaccurate" and res.residuals.get("max", math.inf) > ACCEPT_RTOL:
        raise SolverFailure(f"{what}: inaccurate solution (residual "
                            f"{res.residuals.get('max', math.inf):.2e})", res.residuals)
    return res


def solve_beamforming(problem: SlotProblem, init: BeamformingSolution | None = None,
                      eps: float = 1e-3, max_iter: int = 50, tol: float | None = None
                      ) -> tuple[BeamformingSolution, ConvergenceTrace]:
    """Maximize the weighted sum-rate at a fixed placement.

    Stops when the fractional increase of the true objective drops below
    ``eps`` or after ``max_iter`` relaxed solves.  The returned covariances are
    the best iterate (ties broken toward lower total power).
    """
    check_power_budget(problem)
    current = initial_point(problem) if init is None else init
    if not problem.sensing:
        current = BeamformingSolution(current.W, np.zeros_like(current.Rs))
    if problem.violations(current, rtol=1e-9):
        current = repair(problem, current, tol)

    trace = ConvergenceTrace()
    t0 = time.perf_counter()
    obj = problem.objective(current)
    trace.objectives.append(obj)
    trace.statuses.append("init")
    trace.times.append(0.0)
    best = (obj, -current.power, current)

    for _ in range(max_iter):
        point = build_surrogate(problem.channels, problem.noise, current.W, current.Rs)
        res = _checked(conic.solve(build_sdr(problem, point), tol), "sdr")
        current = _solution_from(res.values, problem)
        new = problem.objective(current)
        trace.objectives.append(new)
        trace.statuses.append(res.status)
        trace.times.append(time.perf_counter() - t0)
        if (new, -current.power) > best[:2]:
            best = (new, -current.power, current)
        gain = (new - obj) / max(abs(obj), 1e-12)
        obj = new
        if gain < eps:
            break
    sol = best[2]
    sol.meta["iterations"] = trace.iterations
    return sol, trace


def solve_sensing_only(problem: SlotProblem, tol: float | None = None) -> tuple[BeamformingSolution, float]:
    """max over Rs of min_q a_q^H Rs a_q / d_q^2 under the SNR floor and power cap."""
    if problem.power_floor > problem.power_max * (1 + 1e-9):
        raise InfeasibleError("snr")
    M = problem.M
    cons = []
    for q in range(problem.Q):
        a = problem.target_steering[q]
        A = np.outer(a, a.conj()) / problem.target_d2[q]
        # scale by d^2 so the epigraph variable is O(W / m^2) * d0^2
        cons.append(Linear(Affine.trace("Rs", A * 1e8) - Affine.coef("t", [1.0]), lo=0.0,
                           label="beampattern"))
    power = Affine.trace("Rs", dim=M)
    cons.append(Linear(power, lo=problem.power_floor, label="snr"))
    cons.append(Linear(power, hi=problem.power_max, label="power"))
    prog = ConicProgram(herm_vars=(HermitianVar("Rs", M),), vec_vars=(VectorVar("t", 1),),
                        linear=Affine.coef("t", [1.0]), constraints=tuple(cons))
    res = _checked(conic.solve(prog, tol), "snr")
    Rs = res.values["Rs"]
    sol = BeamformingSolution(np.zeros((problem.K, M, M), complex), Rs,
                              np.zeros((problem.K, M), complex))
    return sol, min_normalized_beampattern(problem, Rs)


def min_normalized_beampattern(problem: SlotProblem, H: np.ndarray) -> float:
    return float(np.min(problem.beampatterns(H) / problem.target_d2))


# ---------------------------------------------------------------------------
# rank-one recovery

def _psd_part(A: np.ndarray) -> np.ndarray:
    A = 0.5 * (A + A.conj().T)
    ev, U = np.linalg.eigh(A)
    if ev.min() >= 0:
        return A
    return (U * np.maximum(ev, 0.0)) @ U.conj().T


def extract_rank_one(solution: BeamformingSolution, channels, problem: SlotProblem | None = None,
                     n_draws: int = 200, seed: int = 0, psd_rtol: float = 1e-9
                     ) -> BeamformingSolution:
    """w_k = W_k g_k / sqrt(g_k^H W_k g_k), Rs' = H - sum_k w_k w_k^H.

    Each user's received powers, the total covariance and the total power are
    unchanged.  Solver round-off can leave the covariances a hair outside the
    PSD cone, so they are projected first; Rs' = Rs + sum_k (W_k - w_k w_k^H)
    is then PSD up to rounding.  If it is not PSD within ``psd_rtol``,
    Gaussian randomization is used instead, which needs ``problem`` to check
    feasibility.
    """
    G = np.asarray(channels)
    K, M = solution.K, solution.M
    W = np.array([_psd_part(Wk) for Wk in solution.W])
    w = np.zeros((K, M), complex)
    for k in range(K):
        Wg = W[k] @ G[k]
        gain = float(np.real(np.vdot(G[k], Wg)))
        if gain > 0:
            w[k] = Wg / math.sqrt(gain)
    Rs = _psd_part(solution.Rs) + W.sum(axis=0) - np.einsum("ki,kj->ij", w, w.conj())
    Rs = 0.5 * (Rs + Rs.conj().T)
    ev, U = np.linalg.eigh(Rs)
    scale = max(float(np.real(np.trace(solution.total_covariance))), 1e-300)
    if ev.min() >= -psd_rtol * scale:
        if ev.min() < 0:
            Rs = (U * np.maximum(ev, 0.0)) @ U.conj().T
        out = BeamformingSolution.from_vectors(w, Rs, **solution.meta)
        if problem is not None and out.power > problem.power_max:
            # projection can add ~1e-9 relative power; pull back onto the cap
            f = problem.power_max / out.power
            out = BeamformingSolution.from_vectors(w * math.sqrt(f), Rs * f, **solution.meta)
        out.meta["rank_one"] = "reconstruction"
        return out
    if problem is None:
        raise SolverFailure("rank-one reconstruction left Rs' indefinite and no problem "
                            "was supplied for randomization")
    log.warning("rank-one reconstruction not PSD (min eig %.3g); randomizing", ev.min())
    return randomize(solution, problem, n_draws, seed)


def randomize(solution: BeamformingSolution, problem: SlotProblem, n_draws: int = 200,
              seed: int = 0) -> BeamformingSolution:
    """Best feasible of ``n_draws`` Gaussian draws w_k ~ CN(0, W_k), Rs kept."""
    rng = np.random.default_rng(seed)
    K, M = solution.K, solution.M
    roots = []
    for k in range(K):
        ev, U = np.linalg.eigh(solution.W[k])
        roots.append(U * np.sqrt(np.maximum(ev, 0.0)))
    Rs = solution.Rs
    best = None
    for _ in range(n_draws):
        xi = (rng.standard_normal((K, M)) + 1j * rng.standard_normal((K, M))) / math.sqrt(2)
        w = np.array([roots[k] @ xi[k] for k in range(K)])
        for k in range(K):
            nrm = np.vdot(w[k], w[k]).real
            if nrm > 0:
                w[k] *= math.sqrt(np.real(np.trace(solution.W[k])) / nrm)
        cand = BeamformingSolution.from_vectors(w, Rs)
        if cand.power > problem.power_max:
            s = math.sqrt(problem.power_max / cand.power)
            cand = BeamformingSolution.from_vectors(w * s, Rs * s * s)
        if problem.violations(cand):
            continue
        key = (problem.objective(cand), -cand.power)
        if best is None or key > best[0]:
            best = (key, cand)
    if best is None:
        raise SolverFailure("randomization found no feasible rank-one beamformer")
    out = best[1]
    out.meta.update(solution.meta, rank_one="randomization")
    return out
