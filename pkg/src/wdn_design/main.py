import argparse
import logging
import sys
from pathlib import Path

from .config import (DEFAULT_H_MIN, DEFAULT_V_MAX, LOG_FORMAT, SearchParams, SolverConfig,
                     Variant)
from .data_io import (format_solution, load_catalog, load_instance, read_run_records,
                      read_solution, write_run_record, RunRecord)
from .errors import ContractViolation, InfeasibleInstanceError, InstanceError, WdnDesignError
from .hydraulics import SolutionValidator
from .network import Solution, meshedness, solution_cost
from .search.brute_force import DEFAULT_BRUTE_FORCE_LIMIT, brute_force_optimum
from .search.engine import run as run_search

logger = logging.getLogger("wdn_design")

EXIT_OK = 0
EXIT_INFEASIBLE_SOLUTION = 1
EXIT_INFEASIBLE_INSTANCE = 2
EXIT_INPUT_ERROR = 3


def configure_logging(verbosity: int = 0):
    level = logging.INFO
    if verbosity > 0:
        level = logging.DEBUG
    elif verbosity < 0:
        level = logging.WARNING
    logging.basicConfig(level=level, format=LOG_FORMAT)


def _load(args):
    net, _ = load_instance(args.instance)
    cat = load_catalog(args.catalog)
    try:
        logger.info("meshedness %.3f", meshedness(net))
    except ContractViolation:
        pass
    return net, cat

# -----------------------------------------------
# subcommands
# -----------------------------------------------
def cmd_optimize(args) -> int:
    net, cat = _load(args)
    params = SearchParams(alpha=args.alpha, f0=args.factor, nu=args.pool,
                          time_limit_s=args.time_limit, seed=args.seed, variant=args.variant,
                          pert_prob=args.pert_prob, max_iterations=args.max_iterations,
                          h_min=args.h_min, v_max=args.v_max)
    best, stats = run_search(net, cat, params, SolverConfig())
    cost = solution_cost(best, net, cat)
    print(f"best cost: {cost:.2f}")
    print(f"iterations: {stats.iterations}  simulator calls: {stats.simulator_calls}  "
          f"feasible tested: {stats.feasible_tested}/{stats.tested_solutions}")
    logger.debug("factor trace: %s", stats.factor_trace)

    if args.solution_out:
        Path(args.solution_out).write_text(format_solution(best), encoding="utf-8")
    if args.out:
        rec = RunRecord(instance_id=Path(args.instance).stem, seed=args.seed,
                        time_limit_s=args.time_limit, variant=params.variant.value,
                        best_cost=cost, time_to_best_s=stats.time_to_best_s,
                        iterations=stats.iterations, simulator_calls=stats.simulator_calls,
                        tested_solutions=stats.tested_solutions,
                        feasible_fraction=stats.feasible_fraction,
                        feasible_tested=stats.feasible_tested)
        with open(args.out, "a", encoding="utf-8") as sink:
            write_run_record(rec, sink)
    return EXIT_OK


def cmd_validate(args) -> int:
    net, cat = _load(args)
    if args.uniform is not None:
        S = Solution.uniform(net.pipe_ids, args.uniform)
    else:
        path = Path(args.solution)
        S = read_solution(path.read_text(encoding="utf-8"), source=str(path))
    validator = SolutionValidator(net, cat, args.h_min, args.v_max)
    verdict = validator(S)
    print(f"cost: {solution_cost(S, net, cat):.2f}")
    if verdict:
        print("feasible")
        return EXIT_OK
    v = verdict.violation
    print(f"infeasible: {v.kind} at {v.element or '-'} in period {v.period} "
          f"(value {v.value:.4g}, limit {v.limit:.4g})")
    return EXIT_INFEASIBLE_SOLUTION


def cmd_bruteforce(args) -> int:
    net, cat = _load(args)
    validator = SolutionValidator(net, cat, args.h_min, args.v_max)
    S, cost = brute_force_optimum(net, cat, validator, args.limit)
    print(f"optimum cost: {cost:.2f}")
    sys.stdout.write(format_solution(S))
    return EXIT_OK


def cmd_bench(args) -> int:
    from .experiment import load_plan, run_experiment

    plan = load_plan(args.plan)
    out = args.out or plan.output
    sink = open(out, "a", encoding="utf-8") if out else sys.stdout
    try:
        for rec in run_experiment(plan, jobs=args.jobs):
            write_run_record(rec, sink)
    finally:
        if sink is not sys.stdout:
            sink.close()
    return EXIT_OK


def cmd_summarize(args) -> int:
    from .experiment import summarize

    path = Path(args.records)
    with open(path, encoding="utf-8") as fh:
        records = read_run_records(fh, source=str(path))
    print(summarize(records, baseline=args.baseline).to_text())
    return EXIT_OK

# -----------------------------------------------
# argument parsing
# -----------------------------------------------
def _instance_args(p):
    p.add_argument("--instance", required=True, help="INP instance file")
    p.add_argument("--catalog", default=None,
                   help="pipe-type catalog CSV (default: $WDN_DESIGN_CATALOG or built in)")
    p.add_argument("--h-min", type=float, default=DEFAULT_H_MIN, help="minimum pressure head, m")
    p.add_argument("--v-max", type=float, default=DEFAULT_V_MAX, help="maximum velocity, m/s")


def build_parser() -> argparse.ArgumentParser:
    defaults = SearchParams()
    parser = argparse.ArgumentParser(prog="wdn-design",
                                     description="Least-cost pipe sizing of water networks")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("-q", "--quiet", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="run the iterated local search")
    _instance_args(p)
    p.add_argument("--time-limit", type=float, default=defaults.time_limit_s)
    p.add_argument("--seed", type=int, default=defaults.seed)
    p.add_argument("--alpha", type=float, default=defaults.alpha)
    p.add_argument("--factor", type=int, default=defaults.f0, help="initial type reduction factor")
    p.add_argument("--pool", type=int, default=defaults.nu, help="solution pool size")
    p.add_argument("--variant", choices=[v.value for v in Variant], default=defaults.variant.value)
    p.add_argument("--pert-prob", type=float, default=None,
                   help="probability of the dispersed perturbation (default 1 - alpha)")
    p.add_argument("--max-iterations", type=int, default=None)
    p.add_argument("--out", help="append a run record (JSON line) to this file")
    p.add_argument("--solution-out", help="write the best solution as CSV")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("validate", help="check one solution against pressure and velocity bounds")
    _instance_args(p)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--solution", help="CSV of pipe_id,type")
    group.add_argument("--uniform", type=int, help="give every pipe this type")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("bruteforce", help="exhaustive optimum of a tiny instance")
    _instance_args(p)
    p.add_argument("--limit", type=int, default=DEFAULT_BRUTE_FORCE_LIMIT)
    p.set_defaults(func=cmd_bruteforce)

    p = sub.add_parser("bench", help="run an experiment plan (TOML)")
    p.add_argument("--plan", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="record file (default: the plan's output, else stdout)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("summarize", help="tables of costs, gains and deviations")
    p.add_argument("--records", required=True)
    p.add_argument("--baseline", default=None, help="variant the gains are measured against")
    p.set_defaults(func=cmd_summarize)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose - args.quiet)
    try:
        return args.func(args)
    except InfeasibleInstanceError as exc:
        logger.error("%s", exc)
        return EXIT_INFEASIBLE_INSTANCE
    except (InstanceError, ContractViolation, OSError, ValueError) as exc:
        logger.error("%s", exc)
        return EXIT_INPUT_ERROR
    except WdnDesignError as exc:
        logger.error("%s", exc)
        return EXIT_INPUT_ERROR


def run():
    """Entry point for the `wdn-design` command."""
    sys.exit(main())


if __name__ == "__main__":
    run()
