"""Sparse linear-program container and exact solver.

LpModel is a plain registry of variables (name, bounds), a sparse
linear objective and relational rows.  solve() hands the model to
scipy's HiGHS dual simplex, which is deterministic for a fixed model
and returns a basic (vertex) optimal point; that matters downstream
because placement decisions are decoded from vertex structure.
"""

import re
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

EQ, LE, GE = "=", "<=", ">="

Violation = namedtuple("Violation", "row amount label")


class LpError(RuntimeError):
    """Numeric breakdown inside the solver (not a model status)."""


@dataclass
class LpModel:
    name: str = "lp"
    var_names: list = field(default_factory=list)
    lower: list = field(default_factory=list)
    upper: list = field(default_factory=list)
    objective: dict = field(default_factory=dict)   # var index -> coefficient
    obj_const: float = 0.0
    rows: list = field(default_factory=list)        # (coeffs dict, rel, rhs, label)
    _by_name: dict = field(default_factory=dict, repr=False)

    def add_var(self, name, lo=0.0, hi=np.inf):
        if name in self._by_name:
            raise ValueError("duplicate variable %r" % name)
        if lo > hi:
            raise ValueError("empty bound interval for %r" % name)
        idx = len(self.var_names)
        self.var_names.append(name)
        self.lower.append(float(lo))
        self.upper.append(float(hi))
        self._by_name[name] = idx
        return idx

    def var(self, name):
        return self._by_name[name]

    def has_var(self, name):
        return name in self._by_name

    def add_row(self, coeffs, rel, rhs, label=""):
        if rel not in (EQ, LE, GE):
            raise ValueError("bad relation %r" % rel)
        for idx in coeffs:
            if not (0 <= idx < len(self.var_names)):
                raise ValueError("row %r references unknown variable %d" % (label, idx))
        self.rows.append((dict(coeffs), rel, float(rhs), label))
        return len(self.rows) - 1

    def add_objective(self, coeffs, const=0.0):
        for idx, c in coeffs.items():
            self.objective[idx] = self.objective.get(idx, 0.0) + float(c)
        self.obj_const += const

    @property
    def num_vars(self):
        return len(self.var_names)

    @property
    def num_rows(self):
        return len(self.rows)

    def row_value(self, row_idx, point):
        coeffs, _, _, _ = self.rows[row_idx]
        return sum(c * point[i] for i, c in coeffs.items())

    def objective_value(self, point):
        return sum(c * point[i] for i, c in self.objective.items()) + self.obj_const


@dataclass
class LpSolution:
    status: str
    point: object            # ndarray over model variables, or None
    objective_value: float
    model: LpModel = None

    def value(self, name):
        return float(self.point[self.model.var(name)])


def solve(model, tol=1e-8, bounds_override=None):
    """Solve min objective over the model's rows and bounds.

    bounds_override exists so branch-and-bound can pin binaries
    without copying the row set: either a dict {index: (lo, hi)} of
    sparse patches or a full length-num_vars list of (lo, hi) pairs.
    Infeasible and unbounded come back as statuses; solver failures
    raise LpError.
    """
    n = model.num_vars
    c = np.zeros(n)
    for i, v in model.objective.items():
        c[i] = v

    a_eq, b_eq, a_ub, b_ub = [], [], [], []
    for coeffs, rel, rhs, _ in model.rows:
        row = np.zeros(n)
        for i, v in coeffs.items():
            row[i] = v
        if rel == EQ:
            a_eq.append(row)
            b_eq.append(rhs)
        elif rel == LE:
            a_ub.append(row)
            b_ub.append(rhs)
        else:
            a_ub.append(-row)
            b_ub.append(-rhs)

    lower = list(model.lower)
    upper = list(model.upper)
    if bounds_override:
        if hasattr(bounds_override, "items"):
            pairs = bounds_override.items()
        else:
            if len(bounds_override) != n:
                raise ValueError(
                    "bounds_override list must cover all %d variables" % n
                )
            pairs = enumerate(bounds_override)
        for i, (lo, hi) in pairs:
            lower[i] = lo
            upper[i] = hi
    bounds = list(zip(lower, upper))

    feas_tol = max(tol / 10.0, 1e-10)
    res = linprog(
        c,
        A_ub=np.array(a_ub) if a_ub else None,
        b_ub=np.array(b_ub) if b_ub else None,
        A_eq=np.array(a_eq) if a_eq else None,
        b_eq=np.array(b_eq) if b_eq else None,
        bounds=bounds,
        method="highs-ds",
        options={
            "presolve": True,
            "primal_feasibility_tolerance": feas_tol,
            "dual_feasibility_tolerance": feas_tol,
        },
    )
    if res.status == 2:
        return LpSolution(INFEASIBLE, None, np.nan, model)
    if res.status == 3:
        return LpSolution(UNBOUNDED, None, np.nan, model)
    if res.status != 0:
        raise LpError("solver breakdown on %s: %s" % (model.name, res.message))
    return LpSolution(OPTIMAL, res.x, float(res.fun) + model.obj_const, model)


def check_feasibility(model, point, tol=1e-8):
    """Per-row signed violations of a candidate point.

    Equality rows report lhs - rhs whenever |lhs - rhs| > tol; <= rows
    report positive excess, >= rows negative shortfall.  Empty result
    means the point is feasible within tol.
    """
    point = np.asarray(point, dtype=float)
    if point.shape != (model.num_vars,):
        raise ValueError("point covers %d variables, model has %d"
                         % (point.size, model.num_vars))
    out = []
    for k, (coeffs, rel, rhs, label) in enumerate(model.rows):
        lhs = sum(c * point[i] for i, c in coeffs.items())
        diff = lhs - rhs
        if rel == EQ and abs(diff) > tol:
            out.append(Violation(k, diff, label))
        elif rel == LE and diff > tol:
            out.append(Violation(k, diff, label))
        elif rel == GE and diff < -tol:
            out.append(Violation(k, diff, label))
    return out


def _safe_names(names, prefix):
    return ["%s%d_%s" % (prefix, i, re.sub(r"[^A-Za-z0-9]+", "_", s).strip("_"))
            for i, s in enumerate(names)]


def _terms(coeffs, names):
    parts = []
    for i in sorted(coeffs):
        v = coeffs[i]
        if v == 0:
            continue
        sign = "-" if v < 0 else "+"
        parts.append("%s %.17g %s" % (sign, abs(v), names[i]))
    if not parts:
        return "0 %s" % names[0]
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def lp_format(model):
    """Render the model as LP-format text for external cross-checking."""
    vnames = _safe_names(model.var_names, "v")
    lines = ["\\ Problem: %s" % model.name]
    if model.obj_const:
        lines.append("\\ objective constant %.17g not representable; add it to the optimum"
                     % model.obj_const)
    lines.append("Minimize")
    lines.append(" obj: " + _terms(model.objective, vnames))
    lines.append("Subject To")
    for k, (coeffs, rel, rhs, label) in enumerate(model.rows):
        rowname = _safe_names([label or "row"], "c%d" % k)[0] if label else "c%d" % k
        lines.append(" %s: %s %s %.17g" % (rowname, _terms(coeffs, vnames),
                                           rel if rel != EQ else "=", rhs))
    lines.append("Bounds")
    for i, name in enumerate(vnames):
        lo, hi = model.lower[i], model.upper[i]
        if lo == -np.inf and hi == np.inf:
            lines.append(" %s free" % name)
        elif hi == np.inf:
            lines.append(" %.17g <= %s" % (lo, name))
        elif lo == -np.inf:
            lines.append(" -inf <= %s <= %.17g" % (name, hi))
        else:
            lines.append(" %.17g <= %s <= %.17g" % (lo, name, hi))
    lines.append("End")
    return "\n".join(lines) + "\n"
