"""Solver-agnostic mixed-integer linear model representation and solve backend.

Models are built once and treated as immutable afterwards.  The bundled
backend runs fully in process on scipy's HiGHS bindings: `solve_lp` returns
dual values, `solve_mip` honours a relative gap and a time limit.

Dual convention: for every constraint the reported dual is the sensitivity of
the optimal objective to its right-hand side (minimization), i.e.
d(objective)/d(rhs).  Cut generation relies on this convention.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

CONTINUOUS = "continuous"
BINARY = "binary"

LE = "<="
EQ = "="
GE = ">="

# solve statuses
OPTIMAL = "optimal"
FEASIBLE_GAP = "feasible-gap"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
TIME_LIMIT = "time-limit"


class ModelError(Exception):
    """The model violates an IR invariant (unknown variable, duplicate name, ...)."""


class SolverError(Exception):
    """The backend failed in a way that is not a regular solve status."""


@dataclass(frozen=True)
class Variable:
    name: str
    lb: float
    ub: float
    kind: str


@dataclass(frozen=True)
class Constraint:
    name: str
    coeffs: dict[str, float]
    sense: str
    rhs: float


class LinearModel:
    """Sparse minimization model: variables, named rows, linear objective."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self.objective: dict[str, float] = {}
        self.objective_constant: float = 0.0
        self._var_index: dict[str, int] = {}
        self._row_names: set[str] = set()

    # -- construction -------------------------------------------------------

    def add_variable(self, name: str, lb: float = 0.0, ub: float = math.inf, kind: str = CONTINUOUS) -> str:
        if name in self._var_index:
            raise ModelError(f"duplicate variable name {name!r}")
        if kind not in (CONTINUOUS, BINARY):
            raise ModelError(f"unknown variable kind {kind!r}")
        if kind == BINARY and not (0.0 <= lb and ub <= 1.0):
            raise ModelError(f"binary variable {name!r} must have bounds within [0, 1]")
        if lb > ub:
            raise ModelError(f"variable {name!r} has lb {lb} > ub {ub}")
        self._var_index[name] = len(self.variables)
        self.variables.append(Variable(name, lb, ub, kind))
        return name

    def add_constraint(self, name: str, coeffs: dict[str, float], sense: str, rhs: float) -> str:
        if name in self._row_names:
            raise ModelError(f"duplicate constraint name {name!r}")
        if sense not in (LE, EQ, GE):
            raise ModelError(f"unknown sense {sense!r}")
        for var in coeffs:
            if var not in self._var_index:
                raise ModelError(f"constraint {name!r} references undeclared variable {var!r}")
        self._row_names.add(name)
        self.constraints.append(Constraint(name, dict(coeffs), sense, float(rhs)))
        return name

    def add_objective(self, name: str, coeff: float) -> None:
        if name not in self._var_index:
            raise ModelError(f"objective references undeclared variable {name!r}")
        self.objective[name] = self.objective.get(name, 0.0) + coeff

    def var_index(self, name: str) -> int:
        return self._var_index[name]

    def has_variable(self, name: str) -> bool:
        return name in self._var_index

    @property
    def num_variables(self) -> int:
        return len(self.variables)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    @property
    def num_binaries(self) -> int:
        return sum(1 for v in self.variables if v.kind == BINARY)


def relax_binaries(model: LinearModel) -> LinearModel:
    """Copy of the model with every binary turned continuous on [0, 1]."""
    relaxed = LinearModel(name=f"{model.name}:relaxed")
    for v in model.variables:
        if v.kind == BINARY:
            relaxed.add_variable(v.name, max(v.lb, 0.0), min(v.ub, 1.0), CONTINUOUS)
        else:
            relaxed.add_variable(v.name, v.lb, v.ub, v.kind)
    for c in model.constraints:
        relaxed.add_constraint(c.name, c.coeffs, c.sense, c.rhs)
    relaxed.objective = dict(model.objective)
    relaxed.objective_constant = model.objective_constant
    return relaxed


# ---------------------------------------------------------------------------
# solutions


@dataclass
class Solution:
    status: str
    objective: float | None
    values: dict[str, float] = field(default_factory=dict)
    duals: dict[str, float] | None = None
    reduced_costs: dict[str, float] | None = None
    mip_gap: float | None = None
    dual_bound: float | None = None
    wall_time: float = 0.0

    @property
    def is_optimal(self) -> bool:
        return self.status == OPTIMAL

    def value(self, name: str) -> float:
        return self.values[name]


# ---------------------------------------------------------------------------
# matrix assembly shared by both solve paths


def _objective_vector(model: LinearModel) -> np.ndarray:
    c = np.zeros(model.num_variables)
    for name, coeff in model.objective.items():
        c[model.var_index(name)] = coeff
    return c


def _constraint_matrix(model: LinearModel):
    """COO triplets plus per-row (lower, upper) interval bounds."""
    rows, cols, vals = [], [], []
    lo = np.empty(model.num_constraints)
    hi = np.empty(model.num_constraints)
    for i, con in enumerate(model.constraints):
        for var, coeff in con.coeffs.items():
            rows.append(i)
            cols.append(model.var_index(var))
            vals.append(coeff)
        if con.sense == LE:
            lo[i], hi[i] = -np.inf, con.rhs
        elif con.sense == GE:
            lo[i], hi[i] = con.rhs, np.inf
        else:
            lo[i], hi[i] = con.rhs, con.rhs
    matrix = sp.csr_matrix(
        (vals, (rows, cols)), shape=(model.num_constraints, model.num_variables)
    )
    return matrix, lo, hi


def _bounds_arrays(model: LinearModel):
    lb = np.array([v.lb for v in model.variables])
    ub = np.array([v.ub for v in model.variables])
    return lb, ub


# ---------------------------------------------------------------------------
# solves


def solve_lp(model: LinearModel) -> Solution:
    """Solve the model as an LP (binaries must have been relaxed first).

    Returns primal values, per-constraint duals in the sensitivity
    convention, and per-variable reduced costs.
    """
    if model.num_binaries:
        raise ModelError(f"model {model.name!r} still contains binary variables; relax first")
    start = time.perf_counter()
    c = _objective_vector(model)
    lb, ub = _bounds_arrays(model)

    # split rows into equalities and upper-bounded inequalities (>= is flipped)
    eq_rows, ub_rows = [], []
    for i, con in enumerate(model.constraints):
        (eq_rows if con.sense == EQ else ub_rows).append(i)

    def _rows_matrix(indices, flip_ge: bool):
        rows, cols, vals, rhs = [], [], [], []
        for r, i in enumerate(indices):
            con = model.constraints[i]
            sign = -1.0 if (flip_ge and con.sense == GE) else 1.0
            for var, coeff in con.coeffs.items():
                rows.append(r)
                cols.append(model.var_index(var))
                vals.append(sign * coeff)
            rhs.append(sign * con.rhs)
        matrix = sp.csr_matrix((vals, (rows, cols)), shape=(len(indices), model.num_variables))
        return matrix, np.array(rhs)

    A_eq, b_eq = _rows_matrix(eq_rows, flip_ge=False) if eq_rows else (None, None)
    A_ub, b_ub = _rows_matrix(ub_rows, flip_ge=True) if ub_rows else (None, None)

    res = linprog(
        c,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=np.column_stack([lb, ub]),
        method="highs",
    )
    elapsed = time.perf_counter() - start

    if res.status == 2:
        return Solution(status=INFEASIBLE, objective=None, wall_time=elapsed)
    if res.status == 3:
        return Solution(status=UNBOUNDED, objective=None, wall_time=elapsed)
    if res.status != 0:
        raise SolverError(f"LP backend failed on {model.name!r}: {res.message}")

    values = {v.name: float(x) for v, x in zip(model.variables, res.x)}
    duals: dict[str, float] = {}
    if eq_rows:
        for r, i in enumerate(eq_rows):
            duals[model.constraints[i].name] = float(res.eqlin.marginals[r])
    if ub_rows:
        for r, i in enumerate(ub_rows):
            con = model.constraints[i]
            marginal = float(res.ineqlin.marginals[r])
            # a flipped >= row needs its sensitivity mapped back to the original rhs
            duals[con.name] = -marginal if con.sense == GE else marginal
    reduced = {
        v.name: float(res.lower.marginals[j] + res.upper.marginals[j])
        for j, v in enumerate(model.variables)
    }
    return Solution(
        status=OPTIMAL,
        objective=float(res.fun) + model.objective_constant,
        values=values,
        duals=duals,
        reduced_costs=reduced,
        wall_time=elapsed,
    )


def solve_mip(model: LinearModel, gap: float = 1e-4, time_limit: float | None = None) -> Solution:
    """Solve the model as a MIP to the requested relative gap."""
    start = time.perf_counter()
    c = _objective_vector(model)
    lb, ub = _bounds_arrays(model)
    integrality = np.array([1 if v.kind == BINARY else 0 for v in model.variables])

    constraints = []
    if model.num_constraints:
        matrix, lo, hi = _constraint_matrix(model)
        constraints.append(LinearConstraint(matrix, lo, hi))

    options: dict = {"mip_rel_gap": gap}
    if time_limit is not None:
        options["time_limit"] = float(time_limit)
    res = milp(
        c=c,
        constraints=constraints,
        integrality=integrality,
        bounds=Bounds(lb, ub),
        options=options,
    )
    elapsed = time.perf_counter() - start

    if res.status == 2:
        return Solution(status=INFEASIBLE, objective=None, wall_time=elapsed)
    if res.status == 3:
        return Solution(status=UNBOUNDED, objective=None, wall_time=elapsed)
    if res.status == 1 and res.x is None:
        return Solution(status=TIME_LIMIT, objective=None, wall_time=elapsed)
    if res.status not in (0, 1):
        raise SolverError(f"MIP backend failed on {model.name!r}: {res.message}")

    values = {v.name: float(x) for v, x in zip(model.variables, res.x)}
    mip_gap = float(res.mip_gap) if res.mip_gap is not None else None
    dual_bound = res.mip_dual_bound
    if dual_bound is not None:
        dual_bound = float(dual_bound) + model.objective_constant
    status = OPTIMAL if res.status == 0 else FEASIBLE_GAP
    return Solution(
        status=status,
        objective=float(res.fun) + model.objective_constant,
        values=values,
        mip_gap=mip_gap,
        dual_bound=dual_bound,
        wall_time=elapsed,
    )


# ---------------------------------------------------------------------------
# text interchange dump (CPLEX LP format) for cross-checks with other solvers


def _lp_term(coeff: float, name: str) -> str:
    sign = "-" if coeff < 0 else "+"
    return f"{sign} {abs(coeff):.17g} {name}"


def write_lp(model: LinearModel, path) -> None:
    lines = [f"\\ {model.name}", "Minimize", " obj:"]
    terms = [_lp_term(coeff, name) for name, coeff in model.objective.items() if coeff]
    if model.objective_constant:
        terms.append(_lp_term(model.objective_constant, "")[:-1].rstrip())
    if not terms:
        terms = ["+ 0 " + model.variables[0].name]
    lines[-1] += " " + " ".join(terms)
    lines.append("Subject To")
    sense_txt = {LE: "<=", GE: ">=", EQ: "="}
    for con in model.constraints:
        body = " ".join(_lp_term(coeff, var) for var, coeff in con.coeffs.items() if coeff)
        if not body:
            body = "+ 0 " + model.variables[0].name
        lines.append(f" {con.name}: {body} {sense_txt[con.sense]} {con.rhs:.17g}")
    lines.append("Bounds")
    for v in model.variables:
        lo = "-inf" if v.lb == -math.inf else f"{v.lb:.17g}"
        hi = "+inf" if v.ub == math.inf else f"{v.ub:.17g}"
        lines.append(f" {lo} <= {v.name} <= {hi}")
    binaries = [v.name for v in model.variables if v.kind == BINARY]
    if binaries:
        lines.append("Binaries")
        lines.append(" " + " ".join(binaries))
    lines.append("End")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
