"""Bilinear Benders decomposition for the chance-constrained commitment model.

The master carries the first stage, the indicator budget, and
McCormick-linearized feasibility cuts.  Each scenario owns a slack-minimizing
feasibility LP whose fixing-row duals supply the cut coefficients.  The upper
bound step verifies which scenarios the fixed schedule accommodates and
charges the indicator budget for the rest.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .formulations import (
    FirstStageSolution,
    _add_first_stage,
    _add_scenario_block,
    _ScenarioTotals,
    extract_first_stage,
    first_stage_cost,
    piecewise_for,
)
from .instance import UCInstance
from .model_ir import (
    BINARY,
    EQ,
    FEASIBLE_GAP,
    GE,
    INFEASIBLE,
    LE,
    OPTIMAL,
    LinearModel,
    SolverError,
    solve_lp,
    solve_mip,
)
from .scenarios import ScenarioSet

# absolute slack tolerance absorbing LP round-off on top of the configured threshold
FSP_SLACK_TOL = 1e-6
BUDGET_TOL = 1e-12


class MasterInfeasibleError(Exception):
    """No chance-feasible commitment exists (the master became infeasible)."""


class ConvergenceError(Exception):
    """Iteration cap exceeded; carries the state log for inspection."""

    def __init__(self, message: str, state: "BendersState"):
        super().__init__(message)
        self.state = state


@dataclass(frozen=True)
class FirstStagePoint:
    """The six first-stage coordinate blocks a feasibility cut acts on."""

    u: np.ndarray
    v: np.ndarray
    y: np.ndarray
    p: np.ndarray
    r_up: np.ndarray
    r_dn: np.ndarray

    FIELDS = ("u", "v", "y", "p", "r_up", "r_dn")

    def dot(self, other: "FirstStagePoint") -> float:
        return float(
            sum((getattr(self, f) * getattr(other, f)).sum() for f in FirstStagePoint.FIELDS)
        )


def first_stage_point(fss: FirstStageSolution) -> FirstStagePoint:
    return FirstStagePoint(
        u=fss.u.astype(float),
        v=fss.v.astype(float),
        y=fss.y.astype(float),
        p=fss.p.astype(float),
        r_up=fss.r_up.astype(float),
        r_dn=fss.r_dn.astype(float),
    )


@dataclass(frozen=True)
class FeasibilityCut:
    scenario: int
    iteration: int
    phi: float  # slack optimum at the snapshot
    duals: FirstStagePoint
    snapshot: FirstStagePoint

    def value_at(self, point: FirstStagePoint) -> float:
        """Left side of the cut at a first-stage point with the indicator off."""
        delta = FirstStagePoint(
            u=point.u - self.snapshot.u,
            v=point.v - self.snapshot.v,
            y=point.y - self.snapshot.y,
            p=point.p - self.snapshot.p,
            r_up=point.r_up - self.snapshot.r_up,
            r_dn=point.r_dn - self.snapshot.r_dn,
        )
        return self.phi + self.duals.dot(delta)


@dataclass
class FeasibilityResult:
    scenario: int
    psi: float  # total slack needed to absorb the scenario
    balance_surplus: np.ndarray  # (T,)
    balance_deficit: np.ndarray  # (T,)
    line_overflow: np.ndarray  # (L, T)
    duals: FirstStagePoint


@dataclass
class IterationRecord:
    iteration: int
    lower_bound: float
    upper_bound: float
    gap: float
    cuts_added: int
    fsp_violations: int
    wall_time: float


@dataclass
class BendersState:
    iteration: int = 0
    lower_bound: float = -math.inf
    upper_bound: float = math.inf
    cuts: list[FeasibilityCut] = field(default_factory=list)
    incumbent: FirstStageSolution | None = None
    log: list[IterationRecord] = field(default_factory=list)

    @property
    def gap(self) -> float:
        return relative_gap(self.upper_bound, self.lower_bound)


def relative_gap(upper: float, lower: float) -> float:
    """Termination gap; falls back to the absolute gap when |LB| < 1."""
    if upper == math.inf or lower == -math.inf:
        return math.inf
    if abs(lower) < 1.0:
        return upper - lower
    return (upper - lower) / abs(lower)


# ---------------------------------------------------------------------------
# feasibility check subproblem


def build_fsp(
    inst: UCInstance,
    scenarios: ScenarioSet,
    n: int,
    fixed: FirstStagePoint,
    *,
    include_balance: bool = True,
    slacked: bool = True,
) -> LinearModel:
    """Slack-minimizing LP asking whether a fixed schedule absorbs scenario n.

    First-stage values enter as free variables pinned by equality rows so the
    row duals expose the schedule sensitivity.  With ``include_balance=False``
    the balance rows are omitted (feasibility of a scenario whose indicator is
    on under the literal reformulation).
    """
    model = LinearModel(name=f"{inst.name}:fsp[{n}]")
    T = inst.horizon
    for u in inst.units:
        for t in range(1, T + 1):
            model.add_variable(f"on[{u.id},{t}]", -math.inf, math.inf)
            model.add_variable(f"start[{u.id},{t}]", -math.inf, math.inf)
            model.add_variable(f"stop[{u.id},{t}]", -math.inf, math.inf)
            model.add_variable(f"p[{u.id},{t}]", -math.inf, math.inf)
            model.add_variable(f"rup[{u.id},{t}]", -math.inf, math.inf)
            model.add_variable(f"rdn[{u.id},{t}]", -math.inf, math.inf)

    names = {"on": "u", "start": "v", "stop": "y", "p": "p", "rup": "r_up", "rdn": "r_dn"}
    for gi, u in enumerate(inst.units):
        for t in range(1, T + 1):
            for prefix, fld in names.items():
                model.add_constraint(
                    f"fix_{prefix}[{u.id},{t}]",
                    {f"{prefix}[{u.id},{t}]": 1.0},
                    EQ,
                    float(getattr(fixed, fld)[gi, t - 1]),
                )

    totals = _ScenarioTotals(inst, scenarios)
    balance = "slacked" if (include_balance and slacked) else ("strict" if include_balance else "none")
    _add_scenario_block(
        model, inst, scenarios, totals, n, balance, line_slack=slacked
    )
    if slacked:
        for t in range(1, T + 1):
            model.add_objective(f"surplus[{t},{n}]", 1.0)
            model.add_objective(f"deficit[{t},{n}]", 1.0)
        for line in inst.network.lines:
            for t in range(1, T + 1):
                model.add_objective(f"overflow[{line.id},{t},{n}]", 1.0)
    return model


def solve_fsp(
    inst: UCInstance, scenarios: ScenarioSet, n: int, fixed: FirstStagePoint
) -> FeasibilityResult:
    model = build_fsp(inst, scenarios, n, fixed)
    sol = solve_lp(model)
    if sol.status != OPTIMAL:
        raise SolverError(
            f"feasibility subproblem for scenario {n} reported {sol.status}; "
            "it is feasible by construction, so this is a backend fault"
        )
    T = inst.horizon
    surplus = np.array([sol.values[f"surplus[{t},{n}]"] for t in range(1, T + 1)])
    deficit = np.array([sol.values[f"deficit[{t},{n}]"] for t in range(1, T + 1)])
    overflow = np.array(
        [
            [sol.values[f"overflow[{line.id},{t},{n}]"] for t in range(1, T + 1)]
            for line in inst.network.lines
        ]
    ).reshape(len(inst.network.lines), T)

    def dual_block(prefix: str) -> np.ndarray:
        return np.array(
            [
                [sol.duals[f"fix_{prefix}[{u.id},{t}]"] for t in range(1, T + 1)]
                for u in inst.units
            ]
        )

    duals = FirstStagePoint(
        u=dual_block("on"),
        v=dual_block("start"),
        y=dual_block("stop"),
        p=dual_block("p"),
        r_up=dual_block("rup"),
        r_dn=dual_block("rdn"),
    )
    psi = float(surplus.sum() + deficit.sum() + overflow.sum())
    return FeasibilityResult(
        scenario=n,
        psi=psi,
        balance_surplus=surplus,
        balance_deficit=deficit,
        line_overflow=overflow,
        duals=duals,
    )


def make_cut(
    result: FeasibilityResult,
    fixed: FirstStagePoint,
    iteration: int,
    threshold: float = 0.0,
) -> FeasibilityCut:
    """Turn an infeasible scenario's dual solution into a feasibility cut."""
    if result.psi <= threshold:
        raise ValueError(
            f"scenario {result.scenario} is feasible (psi={result.psi!r}); no cut to generate"
        )
    return FeasibilityCut(
        scenario=result.scenario,
        iteration=iteration,
        phi=result.psi,
        duals=result.duals,
        snapshot=fixed,
    )


# ---------------------------------------------------------------------------
# master problem


_PRODUCT_CAPS = {
    "on": lambda u: 1.0,
    "start": lambda u: 1.0,
    "stop": lambda u: 1.0,
    "p": lambda u: u.p_max,
    "rup": lambda u: u.reserve_up_max,
    "rdn": lambda u: u.reserve_dn_max,
}

_CUT_FIELDS = (("on", "u"), ("start", "v"), ("stop", "y"), ("p", "p"), ("rup", "r_up"), ("rdn", "r_dn"))


def build_master(
    inst: UCInstance,
    scenarios: ScenarioSet,
    cuts: list[FeasibilityCut],
    *,
    epsilon: float | None = None,
) -> LinearModel:
    """First stage plus indicator budget plus linearized feasibility cuts.

    Each cut row deactivates itself when the scenario indicator is on; the
    indicator products are instantiated lazily, only for coordinates that
    carry a nonzero dual in some cut.
    """
    epsilon = inst.risk_level if epsilon is None else epsilon
    model = LinearModel(name=f"{inst.name}:master")
    _add_first_stage(model, inst, piecewise_for(inst))
    for n in range(scenarios.count):
        model.add_variable(f"skip[{n}]", 0.0, 1.0, BINARY)
    coeffs = {f"skip[{n}]": float(scenarios.probabilities[n]) for n in range(scenarios.count)}
    model.add_constraint("skip_budget", coeffs, LE, epsilon)

    def ensure_product(prefix: str, unit, t: int, n: int) -> str:
        prod = f"{prefix}_skip[{unit.id},{t},{n}]"
        if model.has_variable(prod):
            return prod
        cap = _PRODUCT_CAPS[prefix](unit)
        base = f"{prefix}[{unit.id},{t}]"
        skip = f"skip[{n}]"
        model.add_variable(prod, 0.0, cap)
        model.add_constraint(f"mc_{prefix}_cap[{unit.id},{t},{n}]", {prod: 1.0, skip: -cap}, LE, 0.0)
        model.add_constraint(f"mc_{prefix}_le[{unit.id},{t},{n}]", {prod: 1.0, base: -1.0}, LE, 0.0)
        model.add_constraint(
            f"mc_{prefix}_ge[{unit.id},{t},{n}]", {prod: 1.0, base: -1.0, skip: -cap}, GE, -cap
        )
        return prod

    for cut in cuts:
        n = cut.scenario
        snapshot_term = cut.duals.dot(cut.snapshot)
        row: dict[str, float] = {}
        for prefix, fld in _CUT_FIELDS:
            dual_block = getattr(cut.duals, fld)
            for gi, unit in enumerate(inst.units):
                for t in range(1, inst.horizon + 1):
                    d = float(dual_block[gi, t - 1])
                    if d == 0.0:
                        continue
                    base = f"{prefix}[{unit.id},{t}]"
                    prod = ensure_product(prefix, unit, t, n)
                    row[base] = row.get(base, 0.0) + d
                    row[prod] = row.get(prod, 0.0) - d
        rhs = snapshot_term - cut.phi
        row[f"skip[{n}]"] = row.get(f"skip[{n}]", 0.0) + rhs
        model.add_constraint(f"cut[{n},{cut.iteration}]", row, LE, rhs)
    return model


# ---------------------------------------------------------------------------
# upper bound step


def upper_bound_step(
    inst: UCInstance,
    scenarios: ScenarioSet,
    fss: FirstStageSolution,
    *,
    epsilon: float | None = None,
    mode: str | None = None,
    psi_known: dict[int, float] | None = None,
    psi_tol: float | None = None,
) -> tuple[float, np.ndarray | None]:
    """Cheapest chance-feasible completion of a fixed schedule.

    With the first stage pinned the scenarios decouple: a scenario either
    needs no slack (indicator off) or charges the budget (indicator on).  The
    schedule's cost is the bound; an overdrawn budget means +inf.  Under the
    literal mode a charged scenario must still satisfy its line and dispatch
    rows, which is checked by a second, balance-free LP.
    """
    epsilon = inst.risk_level if epsilon is None else epsilon
    mode = inst.config.relaxation_mode if mode is None else mode
    if psi_tol is None:
        psi_tol = inst.config.feasibility_threshold + FSP_SLACK_TOL
    point = first_stage_point(fss)
    psi = dict(psi_known or {})
    for n in range(scenarios.count):
        if n not in psi:
            psi[n] = solve_fsp(inst, scenarios, n, point).psi

    violated = [n for n in range(scenarios.count) if psi[n] > psi_tol]
    budget = math.fsum(float(scenarios.probabilities[n]) for n in violated)
    if budget > epsilon + BUDGET_TOL:
        return math.inf, None
    if mode == "paper-literal":
        for n in violated:
            check = build_fsp(inst, scenarios, n, point, include_balance=False, slacked=False)
            if solve_lp(check).status != OPTIMAL:
                return math.inf, None
    z = np.zeros(scenarios.count, dtype=np.int8)
    z[violated] = 1
    return first_stage_cost(inst, fss), z


# ---------------------------------------------------------------------------
# main loop


def benders_solve(
    inst: UCInstance,
    scenarios: ScenarioSet,
    *,
    epsilon: float | None = None,
    mode: str | None = None,
    sigma: float | None = None,
    mip_gap: float | None = None,
    max_iterations: int | None = None,
    time_limit: float | None = None,
) -> tuple[FirstStageSolution, BendersState]:
    """Iterate master / feasibility checks / bound update until the gap closes.

    Raises MasterInfeasibleError when no commitment can satisfy the risk
    budget, and ConvergenceError (carrying the state) at the iteration cap.
    """
    cfg = inst.config
    epsilon = inst.risk_level if epsilon is None else epsilon
    mode = cfg.relaxation_mode if mode is None else mode
    sigma = cfg.benders_tolerance if sigma is None else sigma
    mip_gap = cfg.mip_gap if mip_gap is None else mip_gap
    max_iterations = cfg.max_iterations if max_iterations is None else max_iterations
    time_limit = cfg.time_limit if time_limit is None else time_limit
    psi_cut = cfg.feasibility_threshold + FSP_SLACK_TOL

    state = BendersState()
    master_gap = min(mip_gap, sigma)

    while state.iteration < max_iterations:
        tic = time.perf_counter()
        state.iteration += 1

        master = build_master(inst, scenarios, state.cuts, epsilon=epsilon)
        ms = solve_mip(master, gap=master_gap, time_limit=time_limit)
        if ms.status == INFEASIBLE:
            raise MasterInfeasibleError(
                f"no chance-feasible commitment at risk level {epsilon} "
                f"(master infeasible at iteration {state.iteration})"
            )
        if ms.status not in (OPTIMAL, FEASIBLE_GAP):
            raise SolverError(f"master solve returned {ms.status} at iteration {state.iteration}")
        fss = extract_first_stage(inst, ms, n_scenarios=scenarios.count)
        bound = ms.dual_bound if ms.dual_bound is not None else ms.objective
        state.lower_bound = max(state.lower_bound, float(bound))

        point = first_stage_point(fss)
        z_hat = fss.z if fss.z is not None else np.zeros(scenarios.count, dtype=np.int8)
        psi_by_scenario: dict[int, float] = {}
        cuts_added = 0
        violations = 0
        for n in range(scenarios.count):
            if z_hat[n]:
                continue
            result = solve_fsp(inst, scenarios, n, point)
            psi_by_scenario[n] = result.psi
            if result.psi > psi_cut:
                violations += 1
                state.cuts.append(
                    make_cut(result, point, state.iteration, threshold=cfg.feasibility_threshold)
                )
                cuts_added += 1

        value, z_best = upper_bound_step(
            inst,
            scenarios,
            fss,
            epsilon=epsilon,
            mode=mode,
            psi_known=psi_by_scenario,
            psi_tol=psi_cut,
        )
        if value < state.upper_bound:
            state.upper_bound = value
            fss.z = z_best
            state.incumbent = fss

        gap = relative_gap(state.upper_bound, state.lower_bound)
        state.log.append(
            IterationRecord(
                iteration=state.iteration,
                lower_bound=state.lower_bound,
                upper_bound=state.upper_bound,
                gap=gap,
                cuts_added=cuts_added,
                fsp_violations=violations,
                wall_time=time.perf_counter() - tic,
            )
        )
        if gap <= sigma:
            incumbent = state.incumbent
            assert incumbent is not None
            incumbent.objective = state.upper_bound
            return incumbent, state

    raise ConvergenceError(
        f"no convergence within {max_iterations} iterations "
        f"(LB={state.lower_bound:.6g}, UB={state.upper_bound:.6g})",
        state,
    )


def iteration_log_rows(state: BendersState) -> list[str]:
    """Iteration log as delimited text rows."""
    rows = ["iteration,lower_bound,upper_bound,gap,cuts_added,fsp_violations,wall_time"]
    for rec in state.log:
        rows.append(
            f"{rec.iteration},{rec.lower_bound!r},{rec.upper_bound!r},{rec.gap!r},"
            f"{rec.cuts_added},{rec.fsp_violations},{rec.wall_time:.6f}"
        )
    return rows
