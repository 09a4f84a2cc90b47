"""Small convex program description and a cvxpy-backed solver.

Only the shapes needed by the beamforming and trajectory subproblems are
supported: Hermitian PSD matrix variables, real vector variables, an objective
made of weighted log2 terms of affine expressions plus a linear part, and
linear / second-order-cone / convex-quadratic constraints.

Hermitian variables are lowered to real symmetric PSD blocks of twice the
dimension, ``[[Re X, -Im X], [Im X, Re X]]``, and every returned solution is
re-checked in numpy against the original (complex) program.
"""

from __future__ import annotations

import math
import os
import time
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Union

import numpy as np

DEFAULT_TOL = 1e-8
TOL_ENV = "HAPS_ISAC_TOL"
FEAS_RTOL = 1e-7


def default_tol() -> float:
    try:
        return float(os.environ.get(TOL_ENV, DEFAULT_TOL))
    except ValueError:
        return DEFAULT_TOL


@dataclass(frozen=True)
class HermitianVar:
    name: str
    dim: int


@dataclass(frozen=True)
class VectorVar:
    name: str
    size: int
    nonneg: bool = False


class Affine:
    """const + sum_X Re tr(C_X X) + sum_v c_v . v"""

    __slots__ = ("const", "herm", "vec")

    def __init__(self, const: float = 0.0, herm: dict | None = None, vec: dict | None = None):
        self.const = float(const)
        self.herm = dict(herm or {})
        self.vec = dict(vec or {})

    # construction helpers
    @classmethod
    def trace(cls, var: str, C=None, dim: int | None = None) -> "Affine":
        if C is None:
            C = np.eye(dim)
        return cls(herm={var: np.asarray(C, dtype=complex)})

    @classmethod
    def coef(cls, var: str, c) -> "Affine":
        return cls(vec={var: np.asarray(c, dtype=float)})

    def _combine(self, other: "Affine", sign: float) -> "Affine":
        herm = dict(self.herm)
        for k, C in other.herm.items():
            herm[k] = herm[k] + sign * C if k in herm else sign * C
        vec = dict(self.vec)
        for k, c in other.vec.items():
            vec[k] = vec[k] + sign * c if k in vec else sign * c
        return Affine(self.const + sign * other.const, herm, vec)

    def __add__(self, other):
        if not isinstance(other, Affine):
            return Affine(self.const + float(other), self.herm, self.vec)
        return self._combine(other, 1.0)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, Affine):
            return Affine(self.const - float(other), self.herm, self.vec)
        return self._combine(other, -1.0)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return self * -1.0

    def __mul__(self, s: float):
        s = float(s)
        return Affine(self.const * s, {k: C * s for k, C in self.herm.items()},
                      {k: c * s for k, c in self.vec.items()})

    __rmul__ = __mul__

    @property
    def variables(self) -> set:
        return set(self.herm) | set(self.vec)

    def evaluate(self, values: dict) -> float:
        v = self.const
        for k, C in self.herm.items():
            v += float(np.real(np.sum(C * values[k].T)))
        for k, c in self.vec.items():
            v += float(c @ values[k])
        return v

    def magnitude(self, values: dict) -> float:
        """Sum of absolute term contributions, used to scale residuals."""
        m = abs(self.const)
        for k, C in self.herm.items():
            m += abs(float(np.real(np.sum(C * values[k].T))))
        for k, c in self.vec.items():
            m += float(np.abs(c) @ np.abs(values[k]))
        return m


@dataclass(frozen=True)
class Linear:
    """lo <= expr <= hi (either side optional; lo == hi is an equality)."""

    expr: Affine
    lo: float | None = None
    hi: float | None = None
    label: str = "linear"


@dataclass(frozen=True)
class SecondOrderCone:
    """|| A v + b ||_2 <= bound"""

    var: str
    A: np.ndarray
    b: np.ndarray
    bound: Affine
    label: str = "soc"


@dataclass(frozen=True)
class ConvexQuadratic:
    """|| A v + b ||_2^2 <= bound"""

    var: str
    A: np.ndarray
    b: np.ndarray
    bound: Affine
    label: str = "quadratic"


Constraint = Union[Linear, SecondOrderCone, ConvexQuadratic]


@dataclass(frozen=True)
class LogTerm:
    weight: float
    expr: Affine


@dataclass(frozen=True)
class ConicProgram:
    """maximize sum_i w_i log2(e_i) + linear  subject to constraints; Hermitian vars are PSD."""

    herm_vars: tuple[HermitianVar, ...] = ()
    vec_vars: tuple[VectorVar, ...] = ()
    log_terms: tuple[LogTerm, ...] = ()
    linear: Affine = field(default_factory=Affine)
    constraints: tuple = ()

    def __post_init__(self):
        declared = {v.name for v in self.herm_vars} | {v.name for v in self.vec_vars}
        if len(declared) != len(self.herm_vars) + len(self.vec_vars):
            raise ValueError("duplicate variable names")
        used = set(self.linear.variables)
        for t in self.log_terms:
            if t.weight < 0:
                raise ValueError("log terms need non-negative weights to stay concave")
            used |= t.expr.variables
        for c in self.constraints:
            if isinstance(c, Linear):
                used |= c.expr.variables
            else:
                used |= {c.var} | c.bound.variables
        missing = used - declared
        if missing:
            raise ValueError(f"undeclared variables: {sorted(missing)}")

    def count(self, label: str | None = None) -> int:
        if label is None:
            return len(self.constraints)
        return sum(1 for c in self.constraints if c.label == label)

    def labels(self) -> dict:
        out: dict[str, int] = {}
        for c in self.constraints:
            out[c.label] = out.get(c.label, 0) + 1
        return out

    def objective(self, values: dict) -> float:
        v = self.linear.evaluate(values)
        for t in self.log_terms:
            arg = t.expr.evaluate(values)
            v += t.weight * (math.log2(arg) if arg > 0 else -math.inf)
        return v


@dataclass
class SolveResult:
    status: str  # optimal | infeasible | inaccurate | failed
    value: float | None = None
    values: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    solver: str = ""
    solve_time: float = 0.0
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def embed(C: np.ndarray) -> np.ndarray:
    """Real symmetric embedding [[Re, -Im], [Im, Re]] of a complex matrix."""
    C = np.asarray(C, dtype=complex)
    return np.block([[C.real, -C.imag], [C.imag, C.real]])


# ---------------------------------------------------------------------------
# verification

def residuals(program: ConicProgram, values: dict) -> dict:
    """Relative primal residuals of ``values`` on the original complex program."""
    worst = {"linear": 0.0, "soc": 0.0, "quadratic": 0.0, "psd": 0.0, "log": 0.0}
    for c in program.constraints:
        if isinstance(c, Linear):
            v = c.expr.evaluate(values)
            viol = max((c.lo - v) if c.lo is not None else 0.0,
                       (v - c.hi) if c.hi is not None else 0.0, 0.0)
            scale = max(1.0, c.expr.magnitude(values), abs(c.lo or 0.0), abs(c.hi or 0.0))
            worst["linear"] = max(worst["linear"], viol / scale)
        else:
            r = c.A @ values[c.var] + c.b
            bound = c.bound.evaluate(values)
            lhs = float(np.linalg.norm(r))
            if isinstance(c, ConvexQuadratic):
                lhs = lhs ** 2
            scale = max(1.0, lhs, c.bound.magnitude(values))
            key = "quadratic" if isinstance(c, ConvexQuadratic) else "soc"
            worst[key] = max(worst[key], max(lhs - bound, 0.0) / scale)
    for hv in program.herm_vars:
        X = values[hv.name]
        ev = np.linalg.eigvalsh(0.5 * (X + X.conj().T))
        tr = max(1.0, float(np.sum(np.abs(ev))))
        worst["psd"] = max(worst["psd"], max(-ev.min(), 0.0) / tr)
    for vv in program.vec_vars:
        if vv.nonneg:
            x = values[vv.name]
            worst["linear"] = max(worst["linear"], max(-x.min(initial=0.0), 0.0)
                                  / max(1.0, float(np.abs(x).max(initial=0.0))))
    for t in program.log_terms:
        if t.expr.evaluate(values) <= 0:
            worst["log"] = math.inf
    worst["max"] = max(worst.values())
    return worst


# ---------------------------------------------------------------------------
# cvxpy backend

def _lower(program: ConicProgram, embed_hermitian: bool):
    import cvxpy as cp

    cvars, cons = {}, []
    herm_parts = {}
    for hv in program.herm_vars:
        M = hv.dim
        if embed_hermitian:
            Y = cp.Variable((2 * M, 2 * M), PSD=True, name=hv.name)
            cons += [Y[:M, :M] == Y[M:, M:], Y[M:, :M] == -Y[:M, M:]]
            cvars[hv.name] = Y
        else:
            X = cp.Variable((M, M), hermitian=True, name=hv.name)
            cons.append(X >> 0)
            cvars[hv.name] = X
        herm_parts[hv.name] = M
    for vv in program.vec_vars:
        cvars[vv.name] = cp.Variable(vv.size, nonneg=vv.nonneg, name=vv.name)

    def lower_affine(a: Affine):
        terms = [a.const] if a.const else []
        for k, C in a.herm.items():
            if embed_hermitian:
                # Re tr(C X) = 1/2 tr(embed(C) embed(X)); embed(C) symmetric for Hermitian C
                terms.append(0.5 * cp.sum(cp.multiply(embed(C).T, cvars[k])))
            else:
                terms.append(cp.real(cp.sum(cp.multiply(C.T, cvars[k]))))
        for k, c in a.vec.items():
            terms.append(c @ cvars[k])
        if not terms:
            return cp.Constant(0.0)
        out = terms[0]
        for t in terms[1:]:
            out = out + t
        return out

    obj = lower_affine(program.linear)
    for t in program.log_terms:
        if t.weight:
            obj = obj + (t.weight / math.log(2)) * cp.log(lower_affine(t.expr))
    for c in program.constraints:
        if isinstance(c, Linear):
            e = lower_affine(c.expr)
            if c.lo is not None and c.hi is not None and c.lo == c.hi:
                cons.append(e == c.lo)
            else:
                if c.lo is not None:
                    cons.append(e >= c.lo)
                if c.hi is not None:
                    cons.append(e <= c.hi)
        elif isinstance(c, SecondOrderCone):
            cons.append(cp.SOC(lower_affine(c.bound), c.A @ cvars[c.var] + c.b))
        elif isinstance(c, ConvexQuadratic):
            cons.append(cp.sum_squares(c.A @ cvars[c.var] + c.b) <= lower_affine(c.bound))
        else:  # pragma: no cover
            raise TypeError(f"unsupported constraint {type(c).__name__}")
    return cp.Problem(cp.Maximize(obj), cons), cvars, herm_parts


def _extract(cvars, herm_parts, embed_hermitian: bool) -> dict:
    values = {}
    for name, var in cvars.items():
        val = np.asarray(var.value)
        if name in herm_parts:
            M = herm_parts[name]
            X = val[:M, :M] + 1j * val[M:, :M] if embed_hermitian else val
            values[name] = 0.5 * (X + X.conj().T)
        else:
            values[name] = val.astype(float).reshape(-1)
    return values


def _solve_once(program: ConicProgram, tol: float, solver: str, embed_hermitian: bool,
                feas_rtol: float) -> SolveResult:
    import cvxpy as cp

    problem, cvars, herm_parts = _lower(program, embed_hermitian)
    opts = {}
    if solver == "CLARABEL":
        opts = {"tol_gap_abs": tol, "tol_gap_rel": tol}
    elif solver == "SCS":
        opts = {"eps": tol}
    t0 = time.perf_counter()
    try:
        with warnings.catch_warnings():
            # inaccurate solves are reported through the status instead
            warnings.simplefilter("ignore", UserWarning)
            problem.solve(solver=solver, **opts)
    except (cp.error.SolverError, ArithmeticError, ValueError) as exc:
        return SolveResult("failed", solver=solver, solve_time=time.perf_counter() - t0,
                           message=str(exc))
    elapsed = time.perf_counter() - t0
    status = problem.status
    if status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
        return SolveResult("infeasible", solver=solver, solve_time=elapsed, message=status)
    if status in (cp.UNBOUNDED, cp.UNBOUNDED_INACCURATE) or any(
            v.value is None for v in cvars.values()):
        return SolveResult("failed", solver=solver, solve_time=elapsed, message=status)
    values = _extract(cvars, herm_parts, embed_hermitian)
    res = residuals(program, values)
    value = program.objective(values)
    ok = status == cp.OPTIMAL and res["max"] <= feas_rtol and math.isfinite(value)
    return SolveResult("optimal" if ok else "inaccurate", value, values, res, solver,
                       elapsed, status)


def solve(program: ConicProgram, tol: float | None = None, solver: str = "CLARABEL",
          embed_hermitian: bool = True, feas_rtol: float = FEAS_RTOL,
          fallback: bool = True) -> SolveResult:
    """Solve ``program``; status is ``optimal`` only if the re-checked residual <= feas_rtol.

    Interior-point runs occasionally stall on badly scaled instances.  With
    ``fallback`` a failed (or inaccurately infeasible) attempt is retried with
    the other Hermitian lowering, then both again at a 100x looser gap
    tolerance.  ``message`` records which attempt produced the result.
    """
    tol = default_tol() if tol is None else tol
    attempts = [(embed_hermitian, tol)]
    if fallback and program.herm_vars:
        attempts.append((not embed_hermitian, tol))
    if fallback:
        attempts += [(e, tol * 100) for e in dict.fromkeys(a[0] for a in attempts)]
    result = None
    for i, (emb, t) in enumerate(attempts):
        res = _solve_once(program, t, solver, emb, feas_rtol)
        if i:
            res.message = f"{res.message} (attempt {i + 1}: embed={emb}, tol={t:g})"
        if res.status in ("optimal", "inaccurate") or (
                res.status == "infeasible" and "inaccurate" not in res.message):
            return res
        if result is None or result.status == "failed":
            result = res
    return result


# ---------------------------------------------------------------------------
# plain-text dump for offline inspection

def _fmt_matrix(C: np.ndarray) -> str:
    rows = ["[" + ", ".join(f"[{z.real:.17g}, {z.imag:.17g}]" for z in row) + "]" for row in C]
    return "[" + ", ".join(rows) + "]"


def _fmt_affine(a: Affine) -> str:
    parts = [f"const {a.const:.17g}"]
    for k, C in a.herm.items():
        parts.append(f"tr {k} {_fmt_matrix(np.atleast_2d(C))}")
    for k, c in a.vec.items():
        parts.append(f"dot {k} [" + ", ".join(f"{x:.17g}" for x in np.ravel(c)) + "]")
    return " ; ".join(parts)


def dump_program(program: ConicProgram) -> str:
    """Line-oriented text form.

    ``var herm <name> <dim>`` / ``var vec <name> <size> [nonneg]`` declare variables;
    objective lines are ``log2 <weight> : <affine>`` and ``linear : <affine>``;
    constraint lines are ``<kind> <label> ... : <affine>``.  An affine
    expression is ``;``-separated ``const c``, ``tr X [[re, im], ...]`` and
    ``dot v [...]`` terms; complex matrices are row-major [re, im] pairs.
    """
    out = ["# haps-isac conic program v1"]
    for hv in program.herm_vars:
        out.append(f"var herm {hv.name} {hv.dim}")
    for vv in program.vec_vars:
        out.append(f"var vec {vv.name} {vv.size}" + (" nonneg" if vv.nonneg else ""))
    out.append("maximize")
    for t in program.log_terms:
        out.append(f"  log2 {t.weight:.17g} : {_fmt_affine(t.expr)}")
    out.append(f"  linear : {_fmt_affine(program.linear)}")
    out.append("subject to")
    for c in program.constraints:
        if isinstance(c, Linear):
            out.append(f"  linear {c.label} lo={c.lo} hi={c.hi} : {_fmt_affine(c.expr)}")
        else:
            kind = "soc" if isinstance(c, SecondOrderCone) else "quad"
            A = "[" + ", ".join("[" + ", ".join(f"{x:.17g}" for x in r) + "]"
                                for r in np.atleast_2d(c.A)) + "]"
            b = "[" + ", ".join(f"{x:.17g}" for x in np.ravel(c.b)) + "]"
            out.append(f"  {kind} {c.label} var={c.var} A={A} b={b} : {_fmt_affine(c.bound)}")
    return "\n".join(out) + "\n"


def total(exprs: Iterable[Affine]) -> Affine:
    out = Affine()
    for e in exprs:
        out = out + e
    return out
