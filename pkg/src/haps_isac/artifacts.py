"""Run directories: deterministic JSON/CSV artifacts written atomically."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import shutil
import tempfile
from pathlib import Path

import numpy as np

from .placement import StaticDesign
from .trajectory import DynamicDesign

SOLUTION = "solution.json"
RECORD = "run.json"
STATUS = "status.json"


def _clean(x):
    """JSON-safe copy: numpy scalars/arrays to lists, non-finite floats to strings."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def csv_text(rows: list[dict], header: list[str] | None = None) -> str:
    header = header or (list(rows[0].keys()) if rows else [])
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=header, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow(_clean(r))
    return buf.getvalue()


def read_csv(path) -> list[dict]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def run_id(*parts) -> str:
    h = hashlib.sha1()
    for p in parts:
        h.update(dumps(p).encode())
    return h.hexdigest()[:12]


class RunDir:
    """Collects files in a temporary directory, then renames it into place.

    An interrupted run leaves only a hidden ``.tmp-*`` directory behind, never
    a directory that looks complete.
    """

    def __init__(self, out: Path, name: str):
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.name = name
        self.tmp = Path(tempfile.mkdtemp(prefix=".tmp-", dir=self.out))
        self.path: Path | None = None

    def write(self, rel: str, text: str) -> None:
        p = self.tmp / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)

    def json(self, rel: str, obj) -> None:
        self.write(rel, dumps(obj))

    def csv(self, rel: str, rows: list[dict], header: list[str] | None = None) -> None:
        self.write(rel, csv_text(rows, header))

    def commit(self) -> Path:
        target = self.out / self.name
        i = 1
        while target.exists():
            i += 1
            target = self.out / f"{self.name}-{i}"
        os.rename(self.tmp, target)
        self.path = target
        return target

    def abort(self) -> None:
        shutil.rmtree(self.tmp, ignore_errors=True)


# ---------------------------------------------------------------------------
# design serialization (no timings, so the JSON is reproducible byte for byte)

def static_to_dict(d: StaticDesign) -> dict:
    out = {"design": "static", "kind": d.kind, "status": d.status, "objective": d.objective,
           "placement": None if d.placement is None else list(d.placement),
           "solution": None if d.solution is None else d.solution.to_dict(),
           "grid": [{k: v for k, v in r.row().items() if k != "time"} for r in d.results]}
    best = d.best_result
    if best is not None and best.trace is not None:
        out["trace"] = [float(o) for o in best.trace.objectives]
    return out


def dynamic_to_dict(d: DynamicDesign) -> dict:
    return {"design": "dynamic", "kind": d.kind, "status": d.status, "objective": d.objective,
            "trajectory": d.trajectory.to_dict(),
            "solutions": [s.to_dict() for s in d.solutions],
            "outer": [{k: v for k, v in r.items() if k != "time"} for r in d.outer],
            "energy": None if d.energy is None else d.energy.to_dict()}


def design_to_dict(d) -> dict:
    return static_to_dict(d) if isinstance(d, StaticDesign) else dynamic_to_dict(d)


def write_design(run: RunDir, d) -> None:
    run.json(SOLUTION, design_to_dict(d))
    if isinstance(d, StaticDesign):
        run.csv("grid.csv", d.table(),
                ["index", "x", "y", "z", "feasible", "objective", "iterations", "time", "status"])
        if d.trace is not None:
            run.csv("trace.csv", d.trace.rows(), ["iteration", "objective", "status", "time"])
    else:
        run.csv("trajectory.csv", d.trajectory.rows(), ["n", "x", "y", "z"])
        run.csv("outer.csv", d.outer,
                ["iteration", "objective_beamforming", "objective", "accepted_steps", "time"])
        rows = []
        for it, traces in enumerate(d.inner, start=1):
            for n, tr in enumerate(traces, start=1):
                rows += [{"outer": it, "slot": n, **r} for r in tr.rows()]
        if rows:
            run.csv("trace.csv", rows, ["outer", "slot", "iteration", "objective", "status", "time"])
        if d.energy is not None:
            run.csv("energy.csv", [{"slot": n, "energy": e} for n, e in
                                   enumerate(d.energy.per_slot, start=1)], ["slot", "energy"])
