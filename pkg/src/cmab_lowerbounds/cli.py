"""Command-line entry point: ``cmab-lb {smoothness,build,bounds,simulate,verify}``.

Exit codes: 0 success, 1 a verify check failed, 2 bad usage or inputs the
library rejects. JSON outputs carry ``schema_version``.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import bounds as bd
from .instance import DisjointInstance, build_dependent_instance, build_independent_instance
from .rewards import MODEL_NAMES, make_model
from .sim import STRATEGIES, bound_from_instance, compare_to_bound, run_episodes, write_traces_csv
from .smoothness import MEASURES, OBJECTIVES, maximize_over_subsets, smoothness_report
from .verify import SUITES, verify

SCHEMA_VERSION = 1


class UsageError(Exception):
    pass


def _csv_floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _csv_ints(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _emit(args, text):
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)


def _json(payload):
    return json.dumps({"schema_version": SCHEMA_VERSION, **payload}, indent=2, sort_keys=True) + "\n"


def _model(args, tiled=True):
    """Reward and means; with ``--copies M`` the means are repeated per copy when ``tiled``."""
    mu = np.asarray(args.mu, dtype=float)
    copies = args.copies if tiled else 1
    reward = make_model(args.model, mu.size, copies)
    return reward, np.tile(mu, copies)


def cmd_smoothness(args):
    reward, mu = _model(args)
    if args.maximize:
        subset, best = maximize_over_subsets(args.maximize, args.objective, reward, mu, method=args.method)
        report = smoothness_report(reward, mu, subset)
        extra = {"maximize": {"measure": args.maximize, "objective": args.objective, "method": args.method, "value": best}}
    else:
        report = smoothness_report(reward, mu, args.subset or ())
        extra = {}
    _emit(args, _json({"model": reward.name, "mu": mu.tolist(), **report.to_dict(), **extra}))
    return 0


def cmd_bounds(args):
    reward, mu = _model(args, tiled=False)
    if args.gap is not None:
        report = bd.dependent_bound(reward, mu, args.m, args.gap)
    else:
        report = bd.independent_bound(reward, mu, args.m, args.horizon)
    if args.copies != 1:
        report = bd.sum_copies_bound(report, args.copies)
    _emit(args, _json({"model": args.model, **report.to_dict()}))
    return 0


def cmd_build(args):
    if args.copies != 1:
        raise UsageError("build works on a single copy; scale its bounds with `bounds --copies`")
    reward, mu = _model(args)
    if args.gap is not None:
        inst = build_dependent_instance(reward, mu, args.gap, args.m, args.optimal_index)
    else:
        inst = build_independent_instance(reward, mu, args.m, args.horizon, args.optimal_index)
    _emit(args, inst.to_json(indent=2) + "\n")
    return 0


def cmd_simulate(args):
    with open(args.instance) as fh:
        inst = DisjointInstance.from_json(fh.read())
    seeds = range(args.seed_start, args.seed_start + args.seeds)
    traces = run_episodes(inst, args.strategy, args.horizon, seeds)
    if args.out in (None, "-"):
        write_traces_csv(traces, sys.stdout)
    else:
        with open(args.out, "w", newline="") as fh:
            write_traces_csv(traces, fh)
    if args.summary:
        payload = {"strategy": args.strategy, "instance_ref": inst.fingerprint()}
        if len(traces) >= 10 and inst.bound_annotations.get("kind"):
            payload["comparison"] = compare_to_bound(traces, bound_from_instance(inst)).to_dict()
        with open(args.summary, "w") as fh:
            fh.write(_json(payload))
    return 0


def cmd_verify(args):
    report = verify(args.suite, args.seed, args.trials)
    _emit(args, report.to_json() + "\n")
    for check in report.checks:
        print(check.line, file=sys.stderr)
    return 0 if report.passed else 1


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="cmab-lb", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def model_args(p):
        p.add_argument("--model", required=True, choices=MODEL_NAMES)
        p.add_argument("--mu", required=True, type=_csv_floats, help="comma-separated means of one copy")
        p.add_argument("--copies", type=_positive_int, default=1)

    def out_arg(p):
        p.add_argument("--out", default=None, help="output path (default stdout)")

    p = sub.add_parser("smoothness", help="Gini-weighted smoothness of a reward at mu")
    model_args(p)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--subset", type=_csv_ints, help="0-based indices of the common subset I")
    group.add_argument("--maximize", choices=MEASURES)
    p.add_argument("--objective", choices=OBJECTIVES, default="per-arm")
    p.add_argument("--method", choices=("brute", "prefix"), default="brute")
    out_arg(p)
    p.set_defaults(func=cmd_smoothness)

    for name, func, helptext in (
        ("bounds", cmd_bounds, "dependent or independent lower bound"),
        ("build", cmd_build, "construct a hard I-disjoint instance"),
    ):
        p = sub.add_parser(name, help=helptext)
        model_args(p)
        p.add_argument("--m", required=True, type=_positive_int, help="number of base arms")
        target = p.add_mutually_exclusive_group(required=True)
        target.add_argument("--gap", type=float)
        target.add_argument("--horizon", type=_positive_int)
        if name == "build":
            p.add_argument("--optimal-index", type=int, default=0)
        out_arg(p)
        p.set_defaults(func=func)

    p = sub.add_parser("simulate", help="run a baseline strategy on a built instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--strategy", required=True, choices=STRATEGIES)
    p.add_argument("--horizon", required=True, type=_positive_int)
    p.add_argument("--seeds", type=_positive_int, default=20)
    p.add_argument("--seed-start", type=int, default=0)
    p.add_argument("--summary", default=None, help="write a JSON comparison against the bound here")
    out_arg(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run randomized property suites")
    p.add_argument("suite", choices=SUITES + ("all",))
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--trials", type=_positive_int, default=1000)
    out_arg(p)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError, OSError) as exc:
        # ConstructionError and the rewards' range checks are ValueErrors
        print(f"cmab-lb {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
