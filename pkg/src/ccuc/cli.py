"""Command-line entry point.

Subcommands: solve, oracle, gap, sweep, bench.  Exit codes: 0 ok,
1 infeasible, 2 non-convergence, 3 input error.
"""

from __future__ import annotations

import argparse
import sys

from . import benders as bd
from . import harness
from .instance import InstanceError, load_instance
from .model_ir import INFEASIBLE, SolverError, UNBOUNDED
from .scenarios import (
    ScenarioError,
    forecast_from_instance,
    from_forecasts,
    load_scenarios,
    sample_scenarios,
)

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_NON_CONVERGENCE = 2
EXIT_INPUT_ERROR = 3


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--instance", required=True, help="instance file (JSON)")
    parser.add_argument("--scenarios", help="scenario file (CSV)")
    parser.add_argument("--sample", type=int, metavar="N", help="sample N scenarios from the forecasts")
    parser.add_argument("--seed", type=int, default=None, help="sampling seed (default: instance rng_seed)")
    parser.add_argument("--wind-spread", type=float, default=0.30, help="relative wind spread for sampling")
    parser.add_argument("--load-spread", type=float, default=0.08, help="relative load spread for sampling")
    parser.add_argument("--epsilon", type=float, default=None, help="risk level (default: instance value)")
    parser.add_argument("--mode", choices=("full-drop", "paper-literal"), default=None)
    parser.add_argument("--big-m", type=float, default=None, help="fixed activation constant override")
    parser.add_argument("--mip-gap", type=float, default=None)
    parser.add_argument("--tolerance", type=float, default=None, help="decomposition stopping tolerance")
    parser.add_argument("--time-limit", type=float, default=None, help="seconds per solve")
    parser.add_argument("--report", help="write report rows as CSV")
    parser.add_argument("--json", dest="json_path", help="write report rows as JSON")


def _load_inputs(args):
    inst = load_instance(args.instance)
    if args.big_m is not None:
        from dataclasses import replace

        inst = replace(inst, config=replace(inst.config, big_m_override=args.big_m))
    if args.scenarios and args.sample:
        raise ScenarioError("pass either --scenarios or --sample, not both")
    if args.scenarios:
        scen = load_scenarios(args.scenarios, inst)
    elif args.sample:
        seed = args.seed if args.seed is not None else inst.config.rng_seed
        forecasts = forecast_from_instance(
            inst, wind_spread=args.wind_spread, load_spread=args.load_spread
        )
        scen = sample_scenarios(inst, forecasts, args.sample, seed)
    else:
        scen = from_forecasts(inst)
    return inst, scen


def _emit(rows, args) -> None:
    print(harness.format_report_table(rows))
    if args.report:
        harness.write_report_csv(rows, args.report)
    if args.json_path:
        harness.write_report_json(rows, args.json_path)


def _exit_code(rows) -> int:
    statuses = {r.status for r in rows}
    if statuses & {INFEASIBLE, UNBOUNDED, "infeasible"}:
        return EXIT_INFEASIBLE
    if "non-converged" in statuses or "time-limit" in statuses:
        return EXIT_NON_CONVERGENCE
    return EXIT_OK


def _cmd_solve(args) -> int:
    inst, scen = _load_inputs(args)
    row = harness.run_method(
        inst,
        scen,
        args.method,
        epsilon=args.epsilon,
        mode=args.mode,
        mip_gap=args.mip_gap,
        sigma=args.tolerance,
        time_limit=args.time_limit,
    )
    _emit([row], args)
    return _exit_code([row])


def _cmd_oracle(args) -> int:
    inst, scen = _load_inputs(args)
    try:
        result = harness.exhaustive_oracle(inst, scen, args.epsilon)
    except bd.MasterInfeasibleError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INFEASIBLE
    print(f"{'dropped scenarios':<24} {'objective':>14}")
    for z, obj in result.evaluations:
        dropped = ",".join(str(i + 1) for i, b in enumerate(z) if b) or "-"
        obj_txt = f"{obj:.2f}" if obj is not None else "infeasible"
        print(f"{dropped:<24} {obj_txt:>14}")
    dropped = ",".join(str(i + 1) for i, b in enumerate(result.best_z) if b) or "-"
    print(f"best: drop [{dropped}] at {result.best_objective:.2f}")
    return EXIT_OK


def _cmd_gap(args) -> int:
    inst, scen = _load_inputs(args)
    rows = harness.integrality_gap_study(
        inst, scen, args.epsilon, mode=args.mode, mip_gap=args.mip_gap, time_limit=args.time_limit
    )
    _emit(rows, args)
    for row in rows:
        if row.integrality_gap is not None:
            print(f"{row.method}: integrality gap {row.integrality_gap:.4f}")
    return _exit_code(rows)


def _cmd_sweep(args) -> int:
    inst, scen = _load_inputs(args)
    epsilons = [float(x) for x in args.epsilons.split(",")] if args.epsilons else None
    counts = [int(x) for x in args.counts.split(",")] if args.counts else None
    sampler = None
    if counts:
        seed = args.seed if args.seed is not None else inst.config.rng_seed
        forecasts = forecast_from_instance(
            inst, wind_spread=args.wind_spread, load_spread=args.load_spread
        )
        sampler = lambda count: sample_scenarios(inst, forecasts, count, seed)
    rows, verdict = harness.sweep(
        inst,
        scen if epsilons else None,
        epsilons=epsilons,
        counts=counts,
        method=args.method,
        mode=args.mode,
        mip_gap=args.mip_gap,
        sigma=args.tolerance,
        time_limit=args.time_limit,
        sampler=sampler,
    )
    _emit(rows, args)
    if verdict is not None:
        print(f"monotone in risk level: {'yes' if verdict else 'NO'}")
    return _exit_code(rows)


def _cmd_bench(args) -> int:
    inst, scen = _load_inputs(args)
    rows = harness.benchmark(
        inst,
        scen,
        args.epsilon,
        mode=args.mode,
        mip_gap=args.mip_gap,
        sigma=args.tolerance,
        time_limit=args.time_limit,
    )
    _emit(rows, args)
    direct = [r.wall_time for r in rows if r.method != "benders"]
    dec = [r.wall_time for r in rows if r.method == "benders"]
    if direct and dec and min(direct) > 0:
        print(f"decomposition/direct time ratio: {dec[0] / min(direct):.3f}")
    return _exit_code(rows)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ccuc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one model")
    _add_common(p_solve)
    p_solve.add_argument("--method", choices=harness.METHODS, default="benders")
    p_solve.set_defaults(func=_cmd_solve)

    p_oracle = sub.add_parser("oracle", help="enumerate admissible indicator combinations")
    _add_common(p_oracle)
    p_oracle.set_defaults(func=_cmd_oracle)

    p_gap = sub.add_parser("gap", help="integrality-gap comparison of both reformulations")
    _add_common(p_gap)
    p_gap.set_defaults(func=_cmd_gap)

    p_sweep = sub.add_parser("sweep", help="sweep over risk levels or scenario counts")
    _add_common(p_sweep)
    p_sweep.add_argument("--epsilons", help="comma-separated risk levels")
    p_sweep.add_argument("--counts", help="comma-separated scenario counts (sampled)")
    p_sweep.add_argument("--method", choices=harness.METHODS, default="benders")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_bench = sub.add_parser("bench", help="compare both direct solves against the decomposition")
    _add_common(p_bench)
    p_bench.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InstanceError, ScenarioError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except bd.MasterInfeasibleError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INFEASIBLE
    except bd.ConvergenceError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_NON_CONVERGENCE
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_NON_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
