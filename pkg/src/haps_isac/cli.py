"""Command-line entry point: ``haps-isac <command> [options]``.

Commands
  validate       check a scenario file and echo its SI form
  solve-static   quasi-stationary placement grid search
  solve-dynamic  alternating trajectory / beamforming design
  baseline       one of the comparison schemes (--kind)
  sweep          one full solve per value of P_max, Gamma or SNR_min
  report         comparison table replayed from stored run directories

Exit codes: 0 success, 2 infeasible, 3 solver failure, 64 usage or input error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__, artifacts
from .baselines import BaselineKind, solve_baseline
from .beamforming import InfeasibleError, SolverFailure
from .conic import default_tol
from .placement import StaticDesign, scenario_grid, solve_static
from .scenario import ScenarioError, builtin_scenario, load_scenario, scenario_to_dict
from .trajectory import DynamicDesign, audit_dynamic, solve_dynamic

EXIT_OK, EXIT_INFEASIBLE, EXIT_SOLVER, EXIT_USAGE = 0, 2, 3, 64

log = logging.getLogger("haps_isac")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty value list")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="haps-isac", description="Beamforming and deployment design for an ISAC HAPS.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, solve=True):
        sp.add_argument("--scenario", required=True,
                        help="scenario YAML/JSON file, or builtin:<name>")
        sp.add_argument("--out", default="runs", help="parent directory for run directories")
        sp.add_argument("-v", "--verbose", action="store_true")
        if solve:
            sp.add_argument("--seed", type=int, help="override the scenario rng_seed")
            sp.add_argument("--tol", type=float, help="conic solver gap tolerance")
            sp.add_argument("--max-iter", type=int, default=50, help="SCA iterations per solve")
            sp.add_argument("--eps", type=float, default=1e-3, help="fractional stopping threshold")
            sp.add_argument("--jobs", type=int, default=1, help="worker processes")
            sp.add_argument("--nx", type=int, default=5)
            sp.add_argument("--ny", type=int, default=5)
            sp.add_argument("--alt-step", type=float, default=1e3, help="altitude grid step (m)")
            sp.add_argument("--los-only", action="store_true", help="drop the NLOS channel part")

    common(sub.add_parser("validate", help="check a scenario file"), solve=False)
    common(sub.add_parser("solve-static", help="quasi-stationary grid search"))
    common(sub.add_parser("solve-dynamic", help="trajectory and beamforming design"))
    b = sub.add_parser("baseline", help="comparison scheme")
    common(b)
    b.add_argument("--kind", required=True, choices=[k.value for k in BaselineKind])
    s = sub.add_parser("sweep", help="parameter sweep")
    common(s)
    s.add_argument("--design", choices=["static", "dynamic"], default="static")
    s.add_argument("--kind", default="isac", choices=["isac"] + [k.value for k in BaselineKind])
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--pmax", type=_floats, help="P_max values (W)")
    g.add_argument("--gamma-dbm", type=_floats, help="beampattern threshold values (dBm)")
    g.add_argument("--snr-min-db", type=_floats, help="SAR SNR floor values (dB)")
    r = sub.add_parser("report", help="compare stored runs")
    r.add_argument("runs", nargs="+", help="run directories, or parents containing them")
    r.add_argument("--out", help="write report.csv here")
    return p


def resolve_scenario(name: str, seed: int | None = None):
    if name.startswith("builtin:"):
        s = builtin_scenario(name.split(":", 1)[1])
    else:
        path = Path(name)
        if not path.exists():
            raise UsageError(f"scenario file not found: {name}")
        s = load_scenario(path)
    return s if seed is None else s.replace(rng_seed=seed)


def _grid(args, scenario):
    return scenario_grid(scenario, args.nx, args.ny, args.alt_step)


def run_design(kind: str, design: str, scenario, args):
    """One solve; returns a StaticDesign or DynamicDesign."""
    tol, common = args.tol, dict(eps=args.eps, max_iter=args.max_iter)
    if kind == "isac":
        if design == "static":
            return solve_static(scenario, _grid(args, scenario), tol=tol, jobs=args.jobs,
                                los_only=args.los_only, **common)
        return solve_dynamic(scenario, tol=tol, **common)
    grid = _grid(args, scenario) if kind.endswith("_static") else None
    return solve_baseline(kind, scenario, grid=grid, seed=args.seed, jobs=args.jobs, tol=tol,
                          los_only=args.los_only, **common)


def _status_code(status: str) -> int:
    if status == "optimal":
        return EXIT_OK
    return EXIT_SOLVER if status == "solver_failure" else EXIT_INFEASIBLE


def _options(args) -> dict:
    keep = ("seed", "tol", "max_iter", "eps", "nx", "ny", "alt_step", "los_only", "kind", "design",
            "pmax", "gamma_dbm", "snr_min_db")
    return {k: getattr(args, k) for k in keep if getattr(args, k, None) is not None}


def _record(run, args, scenario, status, code, elapsed, extra=None):
    run.json("scenario.json", scenario_to_dict(scenario))
    run.json(artifacts.STATUS, {"status": status, "exit_code": code, **(extra or {})})
    run.json(artifacts.RECORD, {"command": args.command, "options": _options(args),
                                "run_id": run.name.rsplit("-", 1)[-1], "status": status,
                                "elapsed_s": round(elapsed, 3), "solver": "CLARABEL",
                                "tol": args.tol if args.tol is not None else default_tol(),
                                "version": __version__})


def cmd_validate(args) -> int:
    out = Path(args.out)
    try:
        scenario = resolve_scenario(args.scenario)
    except ScenarioError as exc:
        rid = artifacts.run_id("validate", args.scenario, exc.errors)
        run = artifacts.RunDir(out, f"validate-{rid}")
        run.json(artifacts.STATUS, {"status": "invalid", "exit_code": EXIT_USAGE, "errors": exc.errors})
        print(f"invalid scenario: {len(exc.errors)} error(s)", file=sys.stderr)
        for e in exc.errors:
            print(f"  {e}", file=sys.stderr)
        print(run.commit())
        return EXIT_USAGE
    rid = artifacts.run_id("validate", scenario_to_dict(scenario))
    run = artifacts.RunDir(out, f"validate-{rid}")
    run.json("scenario.json", scenario_to_dict(scenario))
    run.json(artifacts.STATUS, {"status": "valid", "exit_code": EXIT_OK, "errors": [],
                                "K": scenario.K, "Q": scenario.Q, "M": scenario.M,
                                "slots": scenario.slots, "dt": scenario.dt})
    print(run.commit())
    return EXIT_OK


def cmd_solve(args) -> int:
    scenario = resolve_scenario(args.scenario, args.seed)
    kind = getattr(args, "kind", None) or "isac"
    design = "static" if args.command == "solve-static" or kind.endswith("_static") else "dynamic"
    rid = artifacts.run_id(args.command, scenario_to_dict(scenario), _options(args))
    run = artifacts.RunDir(Path(args.out), f"{args.command}-{rid}")
    t0 = time.perf_counter()
    try:
        try:
            d = run_design(kind, design, scenario, args)
        except InfeasibleError as exc:
            _record(run, args, scenario, "infeasible", EXIT_INFEASIBLE, time.perf_counter() - t0,
                    {"constraint": exc.constraint, "message": str(exc)})
            print(f"infeasible: {exc}", file=sys.stderr)
            print(run.commit())
            return EXIT_INFEASIBLE
        except SolverFailure as exc:
            _record(run, args, scenario, "solver_failure", EXIT_SOLVER, time.perf_counter() - t0,
                    {"message": str(exc)})
            print(f"solver failure: {exc}", file=sys.stderr)
            print(run.commit())
            return EXIT_SOLVER
        code = _status_code(d.status)
        extra = {}
        if isinstance(d, DynamicDesign) and d.kind != "sar_only_dynamic":
            extra["audit"] = audit_dynamic(scenario, d, sensing=d.kind != "comm_only_dynamic")
        artifacts.write_design(run, d)
        _record(run, args, scenario, d.status, code, time.perf_counter() - t0,
                {"objective": d.objective, **extra})
    except BaseException:
        run.abort()
        raise
    print(run.commit())
    print(f"objective {d.objective:.6g} ({d.status})")
    return code


def _sweep_point(job):
    kind, design, scenario, args, param, value = job
    t0 = time.perf_counter()
    row = {"parameter": param, "value": value}
    try:
        d = run_design(kind, design, scenario, args)
        iters = d.iterations if isinstance(d, DynamicDesign) else (
            d.best_result.iterations if d.best_result else 0)
        row.update(objective=d.objective, feasible=int(d.status == "optimal"), iterations=iters,
                   status=d.status)
    except InfeasibleError as exc:
        row.update(objective=-math.inf, feasible=0, iterations=0, status=f"infeasible:{exc.constraint}")
    except SolverFailure:
        row.update(objective=-math.inf, feasible=0, iterations=0, status="solver_failure")
    row["time"] = round(time.perf_counter() - t0, 6)
    return row


def sweep(scenario, param: str, values, kind="isac", design="static", args=None, jobs: int = 1):
    """One cold-started solve per value; rows come back in input order."""
    if not values:
        raise ValueError("empty sweep grid")
    field = {"pmax": "power_max", "gamma_dbm": "bp_threshold", "snr_min_db": "snr_min"}[param]
    conv = {"pmax": float, "gamma_dbm": lambda v: 10 ** ((v - 30) / 10),
            "snr_min_db": lambda v: 10 ** (v / 10)}[param]
    jobs_list = [(kind, design, scenario.replace(**{field: conv(v)}), args, param, v) for v in values]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_sweep_point, jobs_list))
    return [_sweep_point(j) for j in jobs_list]


def cmd_sweep(args) -> int:
    scenario = resolve_scenario(args.scenario, args.seed)
    param = next(p for p in ("pmax", "gamma_dbm", "snr_min_db") if getattr(args, p) is not None)
    values = getattr(args, param)
    rid = artifacts.run_id("sweep", scenario_to_dict(scenario), _options(args))
    run = artifacts.RunDir(Path(args.out), f"sweep-{rid}")
    t0 = time.perf_counter()
    try:
        # the grid-point pool is not nested inside the sweep pool
        point_args = argparse.Namespace(**{**vars(args), "jobs": 1}) if args.jobs > 1 else args
        rows = sweep(scenario, param, values, args.kind, args.design, point_args, args.jobs)
        header = ["parameter", "value", "objective", "feasible", "iterations", "status", "time"]
        run.csv("sweep.csv", rows, header)
        run.json(artifacts.SOLUTION, {"design": "sweep", "kind": args.kind, "mode": args.design,
                                      "rows": [{k: v for k, v in r.items() if k != "time"} for r in rows]})
        status = "optimal" if all(r["feasible"] for r in rows) else "partial"
        _record(run, args, scenario, status, EXIT_OK, time.perf_counter() - t0)
    except BaseException:
        run.abort()
        raise
    print(run.commit())
    for r in rows:
        print(f"{r['parameter']}={r['value']:g}  objective={r['objective']:.6g}  {r['status']}")
    return EXIT_OK


def _run_dirs(paths) -> list[Path]:
    out = []
    for p in map(Path, paths):
        if (p / artifacts.RECORD).exists():
            out.append(p)
        elif p.is_dir():
            out += sorted(c for c in p.iterdir() if (c / artifacts.RECORD).exists())
    return out


def report_rows(paths) -> list[dict]:
    import json

    rows = []
    for d in _run_dirs(paths):
        rec = json.loads((d / artifacts.RECORD).read_text())
        sol_path = d / artifacts.SOLUTION
        if not sol_path.exists():
            rows.append({"run": d.name, "command": rec["command"], "kind": "", "design": "",
                         "objective": "", "status": rec["status"]})
            continue
        sol = json.loads(sol_path.read_text())
        if sol.get("design") == "sweep":
            for r in sol["rows"]:
                rows.append({"run": d.name, "command": "sweep", "kind": sol["kind"],
                             "design": f"{sol['mode']} {r['parameter']}={r['value']:g}",
                             "objective": r["objective"], "status": r["status"]})
            continue
        rows.append({"run": d.name, "command": rec["command"], "kind": sol["kind"],
                     "design": sol["design"], "objective": sol["objective"], "status": sol["status"]})
    return rows


def cmd_report(args) -> int:
    rows = report_rows(args.runs)
    if not rows:
        raise UsageError("no run directories found")
    width = max(len(r["run"]) for r in rows)
    print(f"{'run':<{width}}  {'kind':<18} {'design':<24} {'objective':>14}  status")
    for r in rows:
        obj = r["objective"]
        obj = f"{obj:14.6g}" if isinstance(obj, float) else f"{obj!s:>14}"
        print(f"{r['run']:<{width}}  {r['kind']:<18} {r['design']:<24} {obj}  {r['status']}")
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "report.csv").write_text(
            artifacts.csv_text(rows, ["run", "command", "kind", "design", "objective", "status"]))
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "solve-static": cmd_solve, "solve-dynamic": cmd_solve,
            "baseline": cmd_solve, "sweep": cmd_sweep, "report": cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ScenarioError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
