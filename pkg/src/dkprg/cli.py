"""Command line entry point: ``dkprg <subcommand> ...``.

Exit codes: 0 success, 2 invalid configuration, 3 I/O failure.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import analytics, harness, tsp
from .game import InvalidConfigError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


def _count(text: str) -> int:
    """Accept ``1000``, ``1e9`` or ``10**6`` style agent counts."""
    try:
        if "**" in text:
            base, power = text.split("**")
            value = float(base) ** float(power)
        else:
            value = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc
    if value != int(value):
        raise argparse.ArgumentTypeError(f"expected an integer count, got {text!r}")
    return int(value)


def _open_out(path):
    return sys.stdout if path in (None, "-") else open(path, "w", newline="")


def _close_out(fh):
    if fh is not sys.stdout:
        fh.close()


def cmd_analytic(args) -> int:
    traj = analytics.trajectory(analytics.ModelParams(args.agents, args.stops), horizon=args.horizon)
    fh = _open_out(args.output)
    try:
        analytics.write_trajectory_csv(traj, fh, digits=args.digits)
    finally:
        _close_out(fh)
    return EXIT_OK


_GAME_FLAGS = {
    "agents": "n",
    "stops": "m",
    "policy": "tour_policy",
    "placement": "placement",
    "lam": "lam",
    "max_days": "max_days",
    "budget": "tsp_budget",
}
_EXPERIMENT_FLAGS = {
    "reps": "replications",
    "seed": "master_seed",
    "semantics": "semantics",
    "output": "output_path",
    "format": "format",
    "workers": "workers",
}


def _experiment_from_args(args) -> harness.ExperimentConfig:
    data: dict = {"game": {}}
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
        data.setdefault("game", {})
    for flag, key in _GAME_FLAGS.items():
        if getattr(args, flag) is not None:
            data["game"][key] = getattr(args, flag)
    for flag, key in _EXPERIMENT_FLAGS.items():
        if getattr(args, flag) is not None:
            data[key] = getattr(args, flag)
    if "n" not in data["game"] or "m" not in data["game"]:
        raise InvalidConfigError("--agents and --stops (or a config file) are required")
    try:
        return harness.ExperimentConfig.from_dict(data)
    except TypeError as exc:
        raise InvalidConfigError(str(exc)) from exc


def cmd_simulate(args) -> int:
    config = _experiment_from_args(args)
    report = harness.run_monte_carlo(config)
    if not config.output_path:
        sys.stdout.write(report.to_json() if config.format == "json" else report.to_csv())
    if args.dump_replications:
        report.write_replications_csv(args.dump_replications)
    print(f"{report.replications} replications in {report.duration_s:.2f} s", file=sys.stderr)
    return EXIT_OK


def cmd_compare(args) -> int:
    rows = harness.compare(
        args.agents, args.stops, args.reps, args.seed,
        policy=args.policy, placement=args.placement, lam=args.lam,
        horizon=args.horizon, workers=args.workers, tsp_budget=args.budget,
    )
    fh = _open_out(args.output)
    try:
        harness.write_compare_csv(rows, fh)
    finally:
        _close_out(fh)
    return EXIT_OK


def cmd_reproduce_tables(args) -> int:
    if args.stops is None:
        groups = {}
        for m, n in harness.REFERENCE_INSTANCES:
            groups.setdefault(m, []).append(n)
    else:
        if not args.agents:
            raise InvalidConfigError("--stops needs at least one --agents value")
        groups = {args.stops: args.agents}
    for m, ns in groups.items():
        for path in harness.reproduce_tables(m, ns, args.out_dir):
            print(path)
    return EXIT_OK


def cmd_emit_figures(args) -> int:
    names = args.set or list(harness.CURVE_SETS)
    specs = [s for name in names for s in harness.CURVE_SETS[name]]
    curves = harness.emit_figure_data(specs, args.output, args.format)
    if args.output is None:
        if args.format == "json":
            json.dump(curves, sys.stdout, indent=1)
            sys.stdout.write("\n")
        else:
            sys.stdout.write("series,t,f\n")
            for name, pts in curves.items():
                for t, v in pts:
                    sys.stdout.write(f"{name},{t:.9g},{v:.9g}\n")
    return EXIT_OK


def cmd_tsp_solve(args) -> int:
    instance, labels = tsp.read_instance(args.instance)
    if args.exact:
        tour = tsp.solve_exact(instance)
        method = "exact"
    else:
        tour = tsp.solve_metaheuristic(instance, args.budget, args.seed)
        method = "metaheuristic"
    result = {
        "method": method,
        "tour": [labels[v] for v in tour.closed()],
        "cost": tsp.tour_cost(instance, tour),
    }
    json.dump(result, sys.stdout)
    sys.stdout.write("\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dkprg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analytic", help="exact expected trajectory as CSV")
    p.add_argument("--agents", type=_count, required=True)
    p.add_argument("--stops", type=int, required=True)
    p.add_argument("--horizon", type=int, default=64)
    p.add_argument("--digits", type=int, default=9)
    p.add_argument("--output")
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("simulate", help="Monte Carlo replications of the game")
    p.add_argument("--config", help="JSON file mirroring ExperimentConfig; flags override it")
    p.add_argument("--agents", type=_count)
    p.add_argument("--stops", type=int)
    p.add_argument("--policy", choices=("tsp", "random"))
    p.add_argument("--placement", choices=("concentrated", "uniform"))
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--budget", type=int, help="move evaluations per TSP solve")
    p.add_argument("--max-days", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--semantics", choices=("behavioral", "counting"))
    p.add_argument("--workers", type=int)
    p.add_argument("--output")
    p.add_argument("--format", choices=harness.FORMATS)
    p.add_argument("--dump-replications", help="also write per-replication rows to this CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="exact vs approximate vs Monte Carlo utilization")
    p.add_argument("--agents", type=_count, required=True)
    p.add_argument("--stops", type=int, required=True)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--policy", choices=("tsp", "random"), default="random")
    p.add_argument("--placement", choices=("concentrated", "uniform"), default="uniform")
    p.add_argument("--lambda", dest="lam", type=float, default=0.3)
    p.add_argument("--budget", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("reproduce-tables", help="write the daily progression tables as CSV")
    p.add_argument("--stops", type=int)
    p.add_argument("--agents", type=_count, nargs="*")
    p.add_argument("--out-dir", default="tables")
    p.set_defaults(func=cmd_reproduce_tables)

    p = sub.add_parser("emit-figures", help="utilization curves for plotting")
    p.add_argument("--set", action="append", choices=list(harness.CURVE_SETS), help="default: all sets")
    p.add_argument("--output")
    p.add_argument("--format", choices=harness.FORMATS, default="csv")
    p.set_defaults(func=cmd_emit_figures)

    p = sub.add_parser("tsp-solve", help="solve a TSP instance file")
    p.add_argument("--instance", required=True, help="JSON descriptor or i,j,cost edge CSV")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--exact", action="store_true")
    group.add_argument("--budget", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_tsp_solve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        return args.func(args)
    except OSError as exc:
        name = getattr(exc, "filename", None)
        print(f"error: I/O failure{f' on {name}' if name else ''}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, json.JSONDecodeError) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
