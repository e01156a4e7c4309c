"""Command-line front end: generate, sample, solve, evaluate, compare.

Exit codes: 0 success, 2 problem proven infeasible, 1 any other error
(including usage).
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from .baselines import (
    COMPARE_HEADER,
    MEAN,
    evaluate_out_of_sample,
    percentile,
    solve_deterministic,
)
from .bnc import BnCConfig, solve_bnc
from .core import (
    ServiceParams,
    ValidationError,
    load_instance,
    save_instance,
    schedule_cost,
    schedule_from_json,
    schedule_to_json,
)
from .lagrangian import solve_lagrangian
from .scenarios import GenParams, generate_instance, load_scenarios, sample_scenarios, save_scenarios

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_ERROR)


def _service_args(p: _Parser):
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--delta-trip", type=float, default=0.9)
    p.add_argument("--delta-route", type=float, default=0.8)
    p.add_argument("--lb", type=int, default=1)
    p.add_argument("--ub", type=int, default=5)
    p.add_argument("--eps-tol", type=int, default=1)


def build_parser() -> _Parser:
    parser = _Parser(prog="ccvsp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="generate a random instance")
    g.add_argument("--trips", type=int, required=True)
    g.add_argument("--depots", type=int, required=True)
    g.add_argument("--route-size", type=int, default=10)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--grid", type=int, default=60)
    g.add_argument("--deploy-cost", type=int, default=1000)
    g.add_argument("-o", "--output", required=True)

    s = sub.add_parser("sample", help="sample travel-time scenarios")
    s.add_argument("--instance", required=True)
    s.add_argument("--scenarios", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--cv", type=float, default=None)
    s.add_argument("-o", "--output", required=True)

    so = sub.add_parser("solve", help="solve by exact, heuristic or baseline methods")
    so.add_argument("--instance", required=True)
    so.add_argument("--scenarios-file", required=True)
    so.add_argument("--method", choices=["bnc", "lagr", "det-mean", "det-p75"],
                    default="bnc")
    so.add_argument("--cuts", choices=["nogood", "snogood", "mis", "cmis", "ecmis"],
                    default="ecmis")
    so.add_argument("--vi", choices=["on", "off"], default="on")
    so.add_argument("--zc", choices=["on", "off"], default="on")
    so.add_argument("--time-limit", type=float, default=None)
    so.add_argument("--group-size", type=int, default=20)
    so.add_argument("--percentile", type=float, default=75.0)
    _service_args(so)
    so.add_argument("-o", "--output", required=True)

    e = sub.add_parser("evaluate", help="out-of-sample reliability of a solved schedule")
    e.add_argument("--instance", required=True)
    e.add_argument("--schedule", required=True, help="result JSON from solve")
    e.add_argument("--eval-scenarios", type=int, default=2000)
    e.add_argument("--seed", type=int, default=1)
    e.add_argument("--train-scenarios-file", default=None)
    _service_args(e)
    e.add_argument("-o", "--output", required=True)

    c = sub.add_parser("compare", help="aggregate evaluation reports into one table")
    c.add_argument("reports", nargs="+")
    c.add_argument("-o", "--output", required=True)
    return parser


def _load_params(inst, args) -> ServiceParams:
    return ServiceParams.for_instance(inst, args.lb, args.ub, args.delta_trip,
                                      args.delta_route, args.epsilon, args.eps_tol)


def cmd_generate(args) -> int:
    inst = generate_instance(GenParams(
        n_trips=args.trips, n_depots=args.depots, trips_per_route=args.route_size,
        grid_width=args.grid, grid_height=args.grid, deploy_cost=args.deploy_cost,
        seed=args.seed))
    save_instance(inst, args.output)
    print(f"wrote {args.output}: {inst.n_trips} trips, {inst.n_depots} depots, "
          f"{len(inst.compat)} compatible pairs")
    return EXIT_OK


def cmd_sample(args) -> int:
    inst = load_instance(args.instance)
    scen = sample_scenarios(inst, args.scenarios, args.seed, cv=args.cv)
    save_scenarios(scen, args.output)
    print(f"wrote {args.output}: {scen.count} scenarios")
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    scen = load_scenarios(args.scenarios_file)
    params = _load_params(inst, args)
    t0 = time.monotonic()
    if args.method in ("det-mean", "det-p75"):
        table = MEAN if args.method == "det-mean" else percentile(args.percentile)
        sched = solve_deterministic(inst, table, scen, time_limit=args.time_limit)
        doc = {"status": "Optimal", "method": args.method,
               "objective": schedule_cost(inst, sched),
               "schedule": schedule_to_json(sched),
               "time_s": time.monotonic() - t0}
    elif args.method == "bnc":
        cfg = BnCConfig(cut_family=args.cuts, use_vi=args.vi == "on",
                        relax_z=args.zc == "on", time_limit=args.time_limit)
        res = solve_bnc(inst, params, scen, cfg)
        doc = res.to_json() | {"method": "bnc"}
        if res.status == "Infeasible":
            _write_json(args.output, doc)
            return EXIT_INFEASIBLE
    else:
        cfg = BnCConfig(cut_family=args.cuts, use_vi=args.vi == "on",
                        relax_z=args.zc == "on")
        res = solve_lagrangian(inst, params, scen, cfg, m_gr=args.group_size,
                               group_time_limit=args.time_limit)
        doc = {"status": res.status, "method": "lagr", "objective": res.objective,
               "violations": res.violations, "feasible": res.feasible,
               "primal_bound": res.primal_bound, "dual_bound": res.dual_bound,
               "iterations": res.iterations, "n_groups": res.n_groups,
               "schedule": schedule_to_json(res.schedule) if res.schedule else None,
               "time_s": res.time_s, "log": res.log_csv()}
        if res.schedule is None:
            _write_json(args.output, doc)
            return EXIT_INFEASIBLE
    _write_json(args.output, doc)
    print(f"{args.method}: objective {doc.get('objective')}")
    return EXIT_OK


def _write_json(path, doc) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def cmd_evaluate(args) -> int:
    inst = load_instance(args.instance)
    params = _load_params(inst, args)
    with open(args.schedule) as fh:
        doc = json.load(fh)
    sched = schedule_from_json(doc["schedule"])
    eval_scen = sample_scenarios(inst, args.eval_scenarios, args.seed)
    train = load_scenarios(args.train_scenarios_file) if args.train_scenarios_file else None
    rep = evaluate_out_of_sample(inst, params, sched, eval_scen,
                                 method=doc.get("method", "unknown"),
                                 train_scen=train, time_s=doc.get("time_s", 0.0))
    rows = [COMPARE_HEADER,
            f"{rep.method},{args.instance},{inst.n_trips},{inst.n_depots},"
            f"{eval_scen.count},{rep.objective:.1f},,"
            f"{'' if rep.train_sat_pct is None else f'{rep.train_sat_pct:.2f}'},"
            f"{rep.eval_sat_pct:.2f},{rep.time_s:.2f}"]
    with open(args.output, "w") as fh:
        fh.write("\n".join(rows) + "\n")
    print(f"{rep.method}: {rep.eval_sat_pct:.2f}% of scenarios satisfied")
    return EXIT_OK


def cmd_compare(args) -> int:
    rows = [COMPARE_HEADER]
    parsed = []
    for path in args.reports:
        with open(path) as fh:
            lines = [l.strip() for l in fh if l.strip()]
        if not lines or lines[0] != COMPARE_HEADER:
            raise ValidationError(f"{path} is not an evaluation report")
        for line in lines[1:]:
            parsed.append(line.split(","))
    mean_obj = {}
    for cols in parsed:
        if cols[0] == "det-mean":
            mean_obj[cols[1]] = float(cols[5])
    for cols in parsed:
        base = mean_obj.get(cols[1])
        if base:
            cols[6] = f"{100.0 * (float(cols[5]) - base) / base:.3f}"
        rows.append(",".join(cols))
    with open(args.output, "w") as fh:
        fh.write("\n".join(rows) + "\n")
    print(f"wrote {args.output}: {len(rows) - 1} rows")
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "sample": cmd_sample,
    "solve": cmd_solve,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
