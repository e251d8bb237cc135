"""Study runners: exhaustive indicator-combination oracle, integrality-gap
comparison, risk/scenario sweeps, and the cross-method benchmark."""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass
from itertools import combinations

import numpy as np

from . import benders as bd
from . import formulations as fm
from .instance import UCInstance
from .model_ir import FEASIBLE_GAP, OPTIMAL, LinearModel, relax_binaries, solve_lp, solve_mip
from .scenarios import ScenarioSet

ADMISSIBLE_GUARD = 4096
BUDGET_TOL = 1e-12

METHODS = ("det", "suc", "cc-bigm", "cc-bilinear", "benders")


class OracleGuardError(Exception):
    """Too many admissible indicator combinations to enumerate."""


@dataclass
class RunReport:
    method: str
    instance: str
    n_scenarios: int
    epsilon: float
    relaxation_mode: str
    objective: float | None
    status: str
    wall_time: float
    iterations: int | None = None
    mip_gap: float | None = None
    integrality_gap: float | None = None
    z: tuple[int, ...] | None = None


@dataclass
class OracleResult:
    best_objective: float
    best_z: tuple[int, ...]
    evaluations: list[tuple[tuple[int, ...], float | None]]


# ---------------------------------------------------------------------------
# exhaustive oracle


def enumerate_admissible_z(probabilities, epsilon: float, guard: int = ADMISSIBLE_GUARD):
    """All indicator vectors whose probability mass stays within the budget.

    Ordered by number of dropped scenarios, then lexicographically; raises
    OracleGuardError beyond `guard` combinations.
    """
    probs = [float(p) for p in probabilities]
    n = len(probs)
    # the largest admissible subset size, from the cheapest probabilities
    ordered = sorted(probs)
    k_max, running = 0, 0.0
    for p in ordered:
        if running + p <= epsilon + BUDGET_TOL:
            running += p
            k_max += 1
        else:
            break
    out = []
    for k in range(0, k_max + 1):
        for subset in combinations(range(n), k):
            if math.fsum(probs[i] for i in subset) <= epsilon + BUDGET_TOL:
                z = np.zeros(n, dtype=np.int8)
                z[list(subset)] = 1
                out.append(z)
                if len(out) > guard:
                    raise OracleGuardError(
                        f"more than {guard} admissible indicator combinations; refusing to enumerate"
                    )
    return out


def exhaustive_oracle(
    inst: UCInstance,
    scenarios: ScenarioSet,
    epsilon: float | None = None,
    *,
    guard: int = ADMISSIBLE_GUARD,
    mip_gap: float = 1e-6,
    time_limit: float | None = None,
) -> OracleResult:
    """Solve the restricted stochastic model for every admissible indicator
    vector (dropped scenarios excluded outright) and keep the best."""
    epsilon = inst.risk_level if epsilon is None else epsilon
    best_obj, best_z = math.inf, None
    evaluations = []
    for z in enumerate_admissible_z(scenarios.probabilities, epsilon, guard):
        include = [n for n in range(scenarios.count) if not z[n]]
        model = fm.build_suc(inst, scenarios, include=include)
        sol = solve_mip(model, gap=mip_gap, time_limit=time_limit)
        obj = sol.objective if sol.status in (OPTIMAL, FEASIBLE_GAP) else None
        evaluations.append((tuple(int(x) for x in z), obj))
        if obj is not None and obj < best_obj:
            best_obj, best_z = obj, tuple(int(x) for x in z)
    if best_z is None:
        raise bd.MasterInfeasibleError(
            f"no admissible indicator combination is feasible at risk level {epsilon}"
        )
    return OracleResult(best_objective=best_obj, best_z=best_z, evaluations=evaluations)


# ---------------------------------------------------------------------------
# shared single-run entry


def run_method(
    inst: UCInstance,
    scenarios: ScenarioSet,
    method: str,
    *,
    epsilon: float | None = None,
    mode: str | None = None,
    mip_gap: float | None = None,
    sigma: float | None = None,
    time_limit: float | None = None,
) -> RunReport:
    """Build and solve one model (or run the decomposition) and report it."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; pick one of {METHODS}")
    epsilon = inst.risk_level if epsilon is None else epsilon
    mode = inst.config.relaxation_mode if mode is None else mode
    mip_gap = inst.config.mip_gap if mip_gap is None else mip_gap
    sigma = inst.config.benders_tolerance if sigma is None else sigma
    time_limit = inst.config.time_limit if time_limit is None else time_limit

    start = time.perf_counter()
    iterations = None
    z = None
    gap = None
    if method == "benders":
        try:
            fss, state = bd.benders_solve(
                inst,
                scenarios,
                epsilon=epsilon,
                mode=mode,
                sigma=sigma,
                mip_gap=mip_gap,
                time_limit=time_limit,
            )
            objective, status = fss.objective, OPTIMAL
            iterations = state.iteration
            gap = state.gap
            z = tuple(int(x) for x in fss.z) if fss.z is not None else None
        except bd.MasterInfeasibleError:
            objective, status = None, "infeasible"
        except bd.ConvergenceError as exc:
            objective, status = None, "non-converged"
            iterations = exc.state.iteration
    else:
        if method == "det":
            model = fm.build_first_stage(inst)
        elif method == "suc":
            model = fm.build_suc(inst, scenarios)
        elif method == "cc-bigm":
            model = fm.build_cc_bigm(inst, scenarios, epsilon=epsilon, mode=mode)
        else:
            model = fm.build_cc_bilinear(inst, scenarios, epsilon=epsilon, mode=mode)
        sol = solve_mip(model, gap=mip_gap, time_limit=time_limit)
        objective, status, gap = sol.objective, sol.status, sol.mip_gap
        if method in ("cc-bigm", "cc-bilinear") and sol.values:
            z = tuple(
                1 if sol.values[f"skip[{n}]"] > 0.5 else 0 for n in range(scenarios.count)
            )
    return RunReport(
        method=method,
        instance=inst.name,
        n_scenarios=scenarios.count,
        epsilon=epsilon,
        relaxation_mode=mode,
        objective=objective,
        status=status,
        wall_time=time.perf_counter() - start,
        iterations=iterations,
        mip_gap=gap,
        z=z,
    )


# ---------------------------------------------------------------------------
# integrality gap study


def integrality_gap_study(
    inst: UCInstance,
    scenarios: ScenarioSet,
    epsilon: float | None = None,
    *,
    mode: str | None = None,
    mip_gap: float | None = None,
    time_limit: float | None = None,
) -> list[RunReport]:
    """MIP and LP-relaxation values of both reformulations; the tighter
    formulation must show the smaller integrality gap."""
    epsilon = inst.risk_level if epsilon is None else epsilon
    mode = inst.config.relaxation_mode if mode is None else mode
    mip_gap = inst.config.mip_gap if mip_gap is None else mip_gap

    rows = []
    gaps = {}
    for method, builder in (("cc-bigm", fm.build_cc_bigm), ("cc-bilinear", fm.build_cc_bilinear)):
        model = builder(inst, scenarios, epsilon=epsilon, mode=mode)
        start = time.perf_counter()
        mip_sol = solve_mip(model, gap=mip_gap, time_limit=time_limit)
        lp_sol = solve_lp(relax_binaries(model))
        elapsed = time.perf_counter() - start
        ig = None
        if mip_sol.status == OPTIMAL and lp_sol.status == OPTIMAL and lp_sol.objective:
            ig = mip_sol.objective / lp_sol.objective
            gaps[method] = ig
        status = mip_sol.status if mip_sol.status == OPTIMAL else f"flagged:{mip_sol.status}"
        rows.append(
            RunReport(
                method=method,
                instance=inst.name,
                n_scenarios=scenarios.count,
                epsilon=epsilon,
                relaxation_mode=mode,
                objective=mip_sol.objective,
                status=status,
                wall_time=elapsed,
                mip_gap=mip_sol.mip_gap,
                integrality_gap=ig,
            )
        )
    if len(gaps) == 2:
        assert gaps["cc-bilinear"] <= gaps["cc-bigm"] + 1e-9, (
            f"tightness ordering violated: IG bilinear {gaps['cc-bilinear']!r} "
            f"> IG big-M {gaps['cc-bigm']!r}"
        )
    return rows


# ---------------------------------------------------------------------------
# sweeps


def sweep(
    inst: UCInstance,
    scenarios: ScenarioSet | None,
    *,
    epsilons: list[float] | None = None,
    counts: list[int] | None = None,
    method: str = "benders",
    mode: str | None = None,
    mip_gap: float | None = None,
    sigma: float | None = None,
    time_limit: float | None = None,
    sampler=None,
) -> tuple[list[RunReport], bool | None]:
    """One report row per grid point.  A risk-level sweep also returns a
    monotonicity verdict (costs must not rise as the budget loosens)."""
    if (epsilons is None) == (counts is None):
        raise ValueError("sweep over exactly one of epsilons or counts")
    rows = []
    verdict = None
    if epsilons is not None:
        if scenarios is None:
            raise ValueError("an epsilon sweep needs a scenario set")
        for eps in epsilons:
            rows.append(
                run_method(
                    inst, scenarios, method,
                    epsilon=eps, mode=mode, mip_gap=mip_gap, sigma=sigma, time_limit=time_limit,
                )
            )
        objs = [r.objective for r in rows if r.objective is not None]
        slack = 2e-4 * max((abs(o) for o in objs), default=0.0) + 1e-9
        verdict = len(objs) == len(rows) and all(
            later <= earlier + slack for earlier, later in zip(objs, objs[1:])
        )
    else:
        if sampler is None:
            raise ValueError("a scenario-count sweep needs a sampler(count) callable")
        for count in counts:
            rows.append(
                run_method(
                    inst, sampler(count), method,
                    mode=mode, mip_gap=mip_gap, sigma=sigma, time_limit=time_limit,
                )
            )
    return rows, verdict


# ---------------------------------------------------------------------------
# benchmark


def benchmark(
    inst: UCInstance,
    scenarios: ScenarioSet,
    epsilon: float | None = None,
    *,
    mode: str | None = None,
    mip_gap: float | None = None,
    sigma: float | None = None,
    time_limit: float | None = None,
    agreement_tol: float = 1e-4,
) -> list[RunReport]:
    """Run both direct reformulations and the decomposition on identical
    inputs; optimal objectives must agree within the tolerance."""
    rows = [
        run_method(
            inst, scenarios, method,
            epsilon=epsilon, mode=mode, mip_gap=mip_gap, sigma=sigma, time_limit=time_limit,
        )
        for method in ("cc-bigm", "cc-bilinear", "benders")
    ]
    settled = [r for r in rows if r.status == OPTIMAL and r.objective is not None]
    if len(settled) >= 2:
        values = [r.objective for r in settled]
        scale = max(1.0, max(abs(v) for v in values))
        spread = (max(values) - min(values)) / scale
        assert spread <= agreement_tol, (
            f"methods disagree beyond {agreement_tol}: "
            + ", ".join(f"{r.method}={r.objective!r}" for r in settled)
        )
    return rows


# ---------------------------------------------------------------------------
# report emission


REPORT_COLUMNS = (
    "method",
    "instance",
    "n_scenarios",
    "epsilon",
    "relaxation_mode",
    "objective",
    "status",
    "wall_time",
    "iterations",
    "mip_gap",
    "integrality_gap",
    "z",
)


def write_report_csv(rows: list[RunReport], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        for row in rows:
            record = asdict(row)
            record["z"] = "" if row.z is None else "".join(str(b) for b in row.z)
            writer.writerow([record[c] if record[c] is not None else "" for c in REPORT_COLUMNS])


def write_report_json(rows: list[RunReport], path) -> None:
    payload = []
    for row in rows:
        record = asdict(row)
        record["z"] = list(row.z) if row.z is not None else None
        payload.append(record)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def format_report_table(rows: list[RunReport]) -> str:
    header = f"{'method':<12} {'N':>5} {'eps':>6} {'objective':>14} {'status':>13} {'time[s]':>9} {'itr':>4}"
    lines = [header, "-" * len(header)]
    for r in rows:
        obj = f"{r.objective:.2f}" if r.objective is not None else "-"
        itr = str(r.iterations) if r.iterations is not None else "-"
        lines.append(
            f"{r.method:<12} {r.n_scenarios:>5} {r.epsilon:>6.2f} {obj:>14} {r.status:>13} "
            f"{r.wall_time:>9.2f} {itr:>4}"
        )
    return "\n".join(lines)
