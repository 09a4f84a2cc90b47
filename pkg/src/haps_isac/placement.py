"""Quasi-stationary deployment: grid search over 3D placements.

Each candidate placement gets its own fixed-placement beamforming solve; the
placement with the largest weighted sum-rate wins.  Evaluation is a parallel
map whose results are merged by grid index, so the selection never depends
on completion order.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .beamforming import (ConvergenceTrace, InfeasibleError, SolverFailure, extract_rank_one,
                          slot_problem, solve_beamforming, solve_sensing_only)
from .channel import Placement3D, user_channels
from .comm import BeamformingSolution

log = logging.getLogger(__name__)

TIE_RTOL = 1e-9


def altitude_levels(h_min: float, h_max: float, step: float) -> np.ndarray:
    if step <= 0:
        raise ValueError("altitude step must be positive")
    if h_max < h_min:
        raise ValueError("H_max < H_min")
    n = int(math.floor((h_max - h_min) / step + 1e-9)) + 1
    return h_min + step * np.arange(n)


def enumerate_grid(area, nx: int, ny: int, altitude_step: float,
                   h_min: float, h_max: float) -> list[Placement3D]:
    """nx * ny horizontal points (cell-centred in ``area``) times the altitude levels.

    ``area`` is (x_min, x_max, y_min, y_max).  A single point along an axis sits
    at the centre of that axis.
    """
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be >= 1")
    x0, x1, y0, y1 = area

    def axis(lo, hi, n):
        return np.array([(lo + hi) / 2]) if n == 1 else np.linspace(lo, hi, n)

    xs, ys = axis(x0, x1, nx), axis(y0, y1, ny)
    return [Placement3D(float(x), float(y), float(z))
            for z in altitude_levels(h_min, h_max, altitude_step) for x in xs for y in ys]


def scenario_grid(scenario, nx: int = 5, ny: int = 5, altitude_step: float = 1e3):
    fl = scenario.flight
    return enumerate_grid(scenario.deployment_area(), nx, ny, altitude_step, fl.H_min, fl.H_max)


@dataclass
class PointResult:
    index: int
    placement: Placement3D
    feasible: bool
    objective: float
    iterations: int
    time: float
    status: str = "optimal"
    solution: BeamformingSolution | None = None
    trace: ConvergenceTrace | None = None

    def row(self) -> dict:
        x, y, z = self.placement
        return {"index": self.index, "x": x, "y": y, "z": z, "feasible": int(self.feasible),
                "objective": self.objective, "iterations": self.iterations,
                "time": round(self.time, 6), "status": self.status}


@dataclass
class StaticDesign:
    placement: Placement3D | None
    solution: BeamformingSolution | None
    objective: float
    results: list[PointResult] = field(default_factory=list)
    status: str = "optimal"
    kind: str = "isac"

    @property
    def trace(self) -> ConvergenceTrace | None:
        best = self.best_result
        return None if best is None else best.trace

    @property
    def best_result(self) -> PointResult | None:
        for r in self.results:
            if self.placement is not None and r.placement == self.placement:
                return r
        return None

    def table(self) -> list[dict]:
        return [r.row() for r in self.results]


def selection_key(r: PointResult):
    """Sort key: better objective first; near-ties go to lowest z, then (x, y)."""
    return (r.placement.z, r.placement.x, r.placement.y)


def select_best(results: list[PointResult]) -> PointResult | None:
    feasible = [r for r in results if r.feasible]
    if not feasible:
        return None
    top = max(r.objective for r in feasible)
    tied = [r for r in feasible if r.objective >= top - TIE_RTOL * max(abs(top), 1.0)]
    return min(tied, key=selection_key)


@dataclass(frozen=True)
class _Task:
    scenario: object
    mode: str  # "isac", "comm" or "sar"
    eps: float
    max_iter: int
    tol: float | None
    los_only: bool


def _evaluate(task: _Task, index: int, placement: Placement3D) -> PointResult:
    s = task.scenario
    t0 = time.perf_counter()
    try:
        # one channel realization for every grid point: slot 0, fixed seed
        G = user_channels(s, placement, slot=0, los_only=task.los_only)
        prob = slot_problem(s, placement, G, sensing=task.mode != "comm")
        if task.mode == "sar":
            sol, value = solve_sensing_only(prob, task.tol)
            trace = ConvergenceTrace([value], ["optimal"], [0.0])
            # the objective of the sensing design is its worst normalized gain
            return PointResult(index, placement, True, value, 1, time.perf_counter() - t0,
                               solution=sol, trace=trace)
        sol, trace = solve_beamforming(prob, eps=task.eps, max_iter=task.max_iter, tol=task.tol)
        sol = extract_rank_one(sol, G, prob)
        bad = prob.violations(sol)
        if bad:
            return PointResult(index, placement, False, -math.inf, trace.iterations,
                               time.perf_counter() - t0, status="infeasible:" + ",".join(bad))
        return PointResult(index, placement, True, prob.objective(sol), trace.iterations,
                           time.perf_counter() - t0, solution=sol, trace=trace)
    except InfeasibleError as e:
        return PointResult(index, placement, False, -math.inf, 0, time.perf_counter() - t0,
                           status=f"infeasible:{e.constraint}")
    except SolverFailure as e:
        log.warning("grid point %d failed: %s", index, e)
        return PointResult(index, placement, False, -math.inf, 0, time.perf_counter() - t0,
                           status="solver_failure")


def _evaluate_star(args):
    return _evaluate(*args)


def solve_static(scenario, grid=None, *, eps: float = 1e-3, max_iter: int = 50,
                 tol: float | None = None, jobs: int = 1, los_only: bool = False,
                 mode: str = "isac") -> StaticDesign:
    """Evaluate every grid point and keep the best feasible one.

    ``mode`` selects the per-point problem: ``isac`` (full constraint set),
    ``comm`` (no sensing) or ``sar`` (max-min beampattern).
    """
    grid = scenario_grid(scenario) if grid is None else list(grid)
    if not grid:
        raise ValueError("empty placement grid")
    task = _Task(scenario, mode, eps, max_iter, tol, los_only)
    args = [(task, i, p) for i, p in enumerate(grid)]
    if jobs > 1 and len(grid) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_evaluate_star, args))
    else:
        results = [_evaluate_star(a) for a in args]
    results.sort(key=lambda r: r.index)
    best = select_best(results)
    kind = {"isac": "isac", "comm": "comm_only_static", "sar": "sar_only_static"}[mode]
    if best is None:
        statuses = {r.status for r in results}
        status = "solver_failure" if statuses == {"solver_failure"} else "infeasible"
        return StaticDesign(None, None, -math.inf, results, status, kind)
    return StaticDesign(best.placement, best.solution, best.objective, results, "optimal", kind)
