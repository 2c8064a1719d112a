"""Command-line entry point.

Commands::

    reuseloop bench run --config CFG [--out DIR] [--dotted.key value ...]
    reuseloop bench report --runs RUNS.jsonl [--out DIR]
    reuseloop library inspect --path LIBRARY.json
    reuseloop cost analyze --profile PROFILE.json --rho R --k K

Exit codes: 0 on success, 1 when the HTTP planner failed during a run,
2 on configuration, schema, or usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any

from . import costs, metrics
from .config import build_corpus, build_planner, load_config, resolve_executor
from .engine import read_records, run_loop, write_records
from .errors import RecordStreamError, ReuseLoopError, SchemaError
from .library import MethodLibrary
from .tasks import save_corpus


def _parse_overrides(leftovers: list[str]) -> dict[str, Any]:
    """Turn ``--dotted.key value`` pairs into an override mapping."""
    overrides: dict[str, Any] = {}
    i = 0
    while i < len(leftovers):
        flag = leftovers[i]
        if not flag.startswith("--") or i + 1 >= len(leftovers):
            raise SchemaError("<args>", f"expected '--key value' override pairs, got {flag!r}")
        raw = leftovers[i + 1]
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        overrides[flag[2:]] = value
        i += 2
    return overrides


def cmd_bench_run(args: argparse.Namespace, leftovers: list[str]) -> int:
    overrides = _parse_overrides(leftovers)
    config = load_config(args.config, overrides)

    events = build_corpus(config)
    executor = resolve_executor(config, events)
    planner = build_planner(config)
    library = MethodLibrary.load(config.library_path) if config.library_path else MethodLibrary()

    records = run_loop(events, config.mode, library, planner, config.thresholds, executor)

    out_dir = Path(args.out if args.out else config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_records(records, out_dir / "runs.jsonl")
    report = metrics.aggregate(records)
    metrics.write_report_json(report, out_dir / "report.json")
    metrics.write_report_csv(report, out_dir / "report.csv")
    library.save(out_dir / "library.json")
    if args.events:
        save_corpus(events, out_dir / "events.json")

    print(metrics.format_report_table(report))
    print(f"outputs written to {out_dir}")

    if getattr(planner, "failed_calls", 0):
        print(
            f"error: planner failed {planner.failed_calls} call(s) after retries",
            file=sys.stderr,
        )
        return 1
    return 0


def cmd_bench_report(args: argparse.Namespace) -> int:
    records = read_records(args.runs)
    if not records:
        raise SchemaError("<runs>", "record stream is empty")
    report = metrics.aggregate(records)
    out_dir = Path(args.out) if args.out else Path(args.runs).resolve().parent
    out_dir.mkdir(parents=True, exist_ok=True)
    metrics.write_report_json(report, out_dir / "report.json")
    metrics.write_report_csv(report, out_dir / "report.csv")
    print(metrics.format_report_table(report))
    return 0


def cmd_library_inspect(args: argparse.Namespace) -> int:
    library = MethodLibrary.load(args.path)
    stats = library.stats()
    print(f"{stats['n_methods']} methods")
    if stats["methods"]:
        header = f"{'id':<24}{'steps':>6}{'success_ratio':>15}{'goal_tokens':>13}"
        print(header)
        print("-" * len(header))
        for row in stats["methods"]:
            print(
                f"{row['id']:<24}{row['procedure_len']:>6}"
                f"{row['success_ratio']:>15.4f}{row['n_goal_tokens']:>13}"
            )
    return 0


def cmd_cost_analyze(args: argparse.Namespace) -> int:
    profile = costs.load_profile(args.profile)
    if not 0.0 <= args.rho <= 1.0:
        raise SchemaError("rho", "must lie in [0, 1]")
    if args.k < 0:
        raise SchemaError("k", "must be nonnegative")
    result = costs.reuse_benefit(profile, args.rho, args.k)
    holds = costs.benefit_condition_holds(profile, args.rho, args.k)
    print(f"delta_c     {result.delta_c:.4f}")
    print(f"investment  {result.investment:.4f}")
    print(f"b_reuse     {result.b_reuse:.4f}")
    print(f"b_net       {result.b_net:.4f}")
    print(f"consolidation pays off: {'yes' if holds else 'no'}")
    return 0


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reuseloop",
        description="Closed-loop method-reuse benchmark and cost analysis.",
    )
    top = parser.add_subparsers(dest="command", required=True)

    bench = top.add_parser("bench", help="run or re-aggregate benchmarks")
    bench_sub = bench.add_subparsers(dest="subcommand", required=True)
    run = bench_sub.add_parser("run", help="run a benchmark from a config file")
    run.add_argument("--config", required=True, help="path to the JSON run configuration")
    run.add_argument("--out", default=None, help="output directory (default: config output_dir)")
    run.add_argument("--events", action="store_true",
                     help="also dump the generated event stream as events.json")
    report = bench_sub.add_parser("report", help="recompute the report from runs.jsonl")
    report.add_argument("--runs", required=True, help="path to a runs.jsonl file")
    report.add_argument("--out", default=None, help="where to write report files")

    library = top.add_parser("library", help="inspect a method library file")
    library_sub = library.add_subparsers(dest="subcommand", required=True)
    inspect = library_sub.add_parser("inspect", help="print library statistics")
    inspect.add_argument("--path", required=True, help="path to a library.json file")

    cost = top.add_parser("cost", help="cost-model analysis")
    cost_sub = cost.add_subparsers(dest="subcommand", required=True)
    analyze = cost_sub.add_parser("analyze", help="evaluate the reuse-benefit condition")
    analyze.add_argument("--profile", required=True, help="path to a cost-profile JSON file")
    analyze.add_argument("--rho", type=float, required=True, help="future reuse probability")
    analyze.add_argument("--k", type=int, required=True, help="expected future reuse occasions")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_arg_parser()
    args, leftovers = parser.parse_known_args(argv)

    is_bench_run = args.command == "bench" and args.subcommand == "run"
    if leftovers and not is_bench_run:
        print(f"error: unrecognized arguments: {' '.join(leftovers)}", file=sys.stderr)
        return 2

    try:
        if is_bench_run:
            return cmd_bench_run(args, leftovers)
        if args.command == "bench":
            return cmd_bench_report(args)
        if args.command == "library":
            return cmd_library_inspect(args)
        return cmd_cost_analyze(args)
    except RecordStreamError as exc:
        print(f"error: malformed run record ({exc})", file=sys.stderr)
        return 2
    except (ReuseLoopError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
