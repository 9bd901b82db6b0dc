"""Command-line interface.

Subcommands::

    rwsnap explore  SCENARIO.toml   enumerate or sample schedules, hunt violations
    rwsnap replay   SCENARIO.toml SCHEDULE.json   re-run one recorded schedule
    rwsnap stress   threaded mixed workload with windowed checking
    rwsnap bench    step-complexity sweep over (n, m) grid

Exit status: 0 clean, 1 a correctness violation was found (or reproduced),
2 usage or configuration error (including schedule/scenario binding
mismatches on replay).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional

from .bench import BenchConfig, run_bench
from .checker import check_linearizable, cross_validate, timeline_oracle_check
from .core import (
    MUTANTS,
    ScenarioError,
    VARIANTS,
    VARIANT_FAMILY,
    CollectOrder,
)
from .explore import (
    history_cross_validator,
    merged_explore,
    random_explore,
    replay_schedule,
)
from .reports import (
    check_binding,
    load_schedule,
    make_report,
    save_schedule,
    write_report,
)
from .scenario import Scenario, load_scenario
from .sim import _algorithm
from .stress import StressConfig, run_stress

_EXPLORE_MODES = ("exhaustive", "preemption", "random")


def _add_binding_options(p: argparse.ArgumentParser, *, variant_default=None) -> None:
    p.add_argument(
        "--variant",
        choices=sorted(VARIANTS),
        default=variant_default,
        help="algorithm variant (must stay within the scenario's family)",
    )
    p.add_argument(
        "--mutant",
        choices=sorted(MUTANTS),
        default=None,
        help="apply a bundled rule mutation",
    )
    p.add_argument(
        "--collect-order",
        default=None,
        metavar="ORDER",
        help="entry collect order: asc, desc, or random:<seed>",
    )
    p.add_argument(
        "--out",
        type=Path,
        default=None,
        metavar="DIR",
        help="write report.json (and artifacts) into DIR",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rwsnap",
        description="snapshot algorithms with a schedule-exploring verification harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pe = sub.add_parser("explore", help="enumerate or sample schedules of a scenario")
    pe.add_argument("scenario", type=Path, help="scenario TOML file")
    pe.add_argument("--mode", choices=_EXPLORE_MODES, default=None)
    pe.add_argument("--preemptions", type=int, default=None, metavar="N",
                    help="context-switch bound (preemption mode)")
    pe.add_argument("--runs", type=int, default=None, metavar="N",
                    help="schedule count (random mode)")
    pe.add_argument("--seed", type=int, default=None, metavar="N")
    pe.add_argument("--crashes", type=int, default=None, metavar="N",
                    help="inject up to N process crashes per schedule")
    pe.add_argument("--state-budget", type=int, default=None, metavar="N",
                    help="merged-state limit before giving up")
    pe.add_argument("--stop-on-violation", action="store_true",
                    help="stop at the first violation instead of collecting")
    pe.add_argument("--cross-check", type=int, default=0, metavar="N",
                    help="replay up to N clean schedules through both "
                         "history judges and fail loudly if they disagree")
    _add_binding_options(pe)

    pr = sub.add_parser("replay", help="re-run a recorded schedule and check it")
    pr.add_argument("scenario", type=Path, help="scenario TOML file")
    pr.add_argument("schedule", type=Path, help="schedule JSON recorded by explore")
    _add_binding_options(pr)

    ps = sub.add_parser("stress", help="threaded workload with windowed checking")
    ps.add_argument("--memory", default="counter,register", metavar="T1,T2,…",
                    help="comma-separated object types")
    ps.add_argument("--threads", type=int, default=8)
    ps.add_argument("--ops", type=int, default=10_000, metavar="N",
                    help="total operations across all threads (rounded up to windows)")
    ps.add_argument("--window", type=int, default=25, metavar="N",
                    help="ops per thread between checking barriers")
    ps.add_argument("--scan-ratio", type=float, default=0.3)
    ps.add_argument("--seed", type=int, default=1)
    _add_binding_options(ps, variant_default="conc-wf")

    pb = sub.add_parser("bench", help="scan step-complexity sweep")
    pb.add_argument("--sizes", default="2,4,8", metavar="N1,N2,…",
                    help="grid axis for both process count and memory size")
    pb.add_argument("--random-runs", type=int, default=100)
    pb.add_argument("--rotation-runs", type=int, default=20)
    pb.add_argument("--seed", type=int, default=1)
    _add_binding_options(pb, variant_default="conc-wf")
    return parser


# ---------------------------------------------------------------------------
# Subcommand bodies
# ---------------------------------------------------------------------------


def _iteration_block(cfg, stats) -> dict:
    bound = _algorithm(cfg.family, cfg.rules).iteration_bound(cfg.n)
    return {
        "scan": stats.max_scan_iterations,
        "nested": stats.max_nested_iterations,
        "bound": bound,
        "exceeded": len(stats.bound_exceeded),
    }


def _cmd_explore(args) -> int:
    scenario = load_scenario(args.scenario).with_overrides(
        variant=args.variant, collect_order=args.collect_order
    )
    defaults = dict(scenario.explore_defaults)
    mode = args.mode or defaults.get("mode", "exhaustive")
    seed = args.seed if args.seed is not None else defaults.get("seed", 1)
    runs = args.runs if args.runs is not None else defaults.get("runs", 1000)
    preemptions = (
        args.preemptions
        if args.preemptions is not None
        else defaults.get("preemptions", 3)
    )
    crashes = args.crashes if args.crashes is not None else defaults.get("crashes", 0)
    cfg = scenario.sim_config(mutant=args.mutant)
    kwargs = {"max_crashes": crashes, "stop_on_violation": args.stop_on_violation}
    if args.cross_check:
        kwargs["cross_check"] = args.cross_check
        kwargs["cross_validator"] = history_cross_validator()
    if args.state_budget is not None:
        kwargs["state_budget"] = args.state_budget
    if mode == "random":
        kwargs.pop("state_budget", None)
        report = random_explore(cfg, runs=runs, seed=seed, **kwargs)
    elif mode == "preemption":
        report = merged_explore(cfg, preemption_bound=preemptions, **kwargs)
    else:
        report = merged_explore(cfg, **kwargs)

    result = {
        "mode": mode,
        "schedules": report.schedules,
        "states": report.states,
        "complete": report.complete,
        "stuck": report.stuck,
        "violation_states": report.violation_states,
        "violations": [
            {"kind": v.kind, "pid": v.pid, "opid": v.opid, "schedule": list(v.schedule)}
            for v in report.violations
        ],
        "iteration_max": _iteration_block(cfg, report.stats),
        "scan_paths": dict(report.stats.scan_paths),
        "cross_checked": report.cross_checked,
        "elapsed_s": round(report.elapsed, 3),
        "overflow": report.overflow_reason,
    }
    ok = not report.found_violation
    doc = make_report("explore", scenario, args.mutant, ok, result)
    print(
        f"explore {scenario.name}: mode={mode} schedules={report.schedules} "
        f"states={report.states} complete={report.complete} "
        f"violations={len(report.violations)}"
    )
    if args.out:
        path = write_report(doc, args.out)
        for i, v in enumerate(report.violations, 1):
            sched = save_schedule(
                scenario, args.mutant, v.schedule,
                args.out / f"violation-{i:03d}.schedule.json",
            )
            print(f"  recorded {v.kind} by {v.opid}: {sched}")
        print(f"  report: {path}")
    elif report.violations:
        for v in report.violations[:10]:
            print(f"  {v.kind} by {v.opid} (schedule length {len(v.schedule)})")
    if report.overflow_reason:
        print(f"  warning: exploration incomplete ({report.overflow_reason})",
              file=sys.stderr)
    return 0 if ok else 1


def _cmd_replay(args) -> int:
    scenario = load_scenario(args.scenario).with_overrides(
        variant=args.variant, collect_order=args.collect_order
    )
    doc = load_schedule(args.schedule)
    mutant = args.mutant if args.mutant is not None else doc.get("mutant")
    problems = check_binding(doc, scenario, mutant)
    if problems:
        for p in problems:
            print(f"binding mismatch: {p}", file=sys.stderr)
        return 2
    cfg = scenario.sim_config(mutant=mutant, record=True)
    ex = replay_schedule(cfg, doc["tokens"])
    history = ex.history()
    history.validate()
    checker = check_linearizable(history)
    oracle = timeline_oracle_check(history)
    cross = cross_validate(history)
    result = {
        "steps": len(doc["tokens"]),
        "violations": [
            {"kind": v.kind, "pid": v.pid, "opid": v.opid} for v in ex.violations
        ],
        "checker": {
            "verdict": checker.verdict,
            "witness": checker.witness,
            "evidence": checker.evidence,
            "nodes": checker.nodes,
        },
        "oracle": {
            "verdict": oracle.verdict,
            "violations": list(oracle.violations),
        },
        "consistent": cross.consistent,
        "history_digest": history.digest(),
    }
    ok = not ex.violations and checker.ok and oracle.ok
    doc_out = make_report("replay", scenario, mutant, ok, result)
    print(
        f"replay {scenario.name}: steps={len(doc['tokens'])} "
        f"checker={checker.verdict} oracle={oracle.verdict} "
        f"inline_violations={len(ex.violations)}"
    )
    if not cross.consistent:
        print("  harness defect: oracle and checker disagree", file=sys.stderr)
    if args.out:
        path = write_report(doc_out, args.out)
        (args.out / "history.jsonl").write_text(history.to_jsonl())
        print(f"  report: {path}")
    return 0 if ok else 1


def _cmd_stress(args) -> int:
    memory = tuple(t.strip() for t in args.memory.split(",") if t.strip())
    per_thread = -(-args.ops // max(args.threads, 1))  # ceil
    per_thread += (-per_thread) % args.window  # round up to whole windows
    cfg = StressConfig(
        variant=args.variant,
        memory=memory,
        threads=args.threads,
        ops_per_thread=per_thread,
        window=args.window,
        scan_ratio=args.scan_ratio,
        seed=args.seed,
        mutant=args.mutant,
        collect_order=CollectOrder(args.collect_order or "asc"),
    )
    report = run_stress(cfg)
    result = {
        "threads": report.threads,
        "ops": report.ops,
        "windows": report.windows,
        "checked_windows": report.checked_windows,
        "skipped_windows": report.skipped_windows,
        "violations": [
            {"window": v.window, "source": v.source, "detail": v.detail}
            for v in report.violations
        ],
        "iteration_max": {
            "scan": report.max_scan_iterations,
            "nested": report.max_nested_iterations,
            "bound": report.iteration_bound,
            "exceeded": report.bound_exceeded,
        },
        "elapsed_s": round(report.elapsed, 3),
        "throughput": round(report.throughput, 1),
    }
    scenario = Scenario(
        name=f"stress-{args.variant}",
        variant=args.variant,
        memory=memory,
        processes=(),
        collect_order=args.collect_order or "asc",
    )
    doc = make_report("stress", scenario, args.mutant, report.ok, result)
    print(
        f"stress {args.variant}: ops={report.ops} windows={report.windows} "
        f"(checked {report.checked_windows}, skipped {report.skipped_windows}) "
        f"violations={len(report.violations)} "
        f"max_iter={report.max_scan_iterations}/{report.iteration_bound} "
        f"throughput={report.throughput:.0f} ops/s"
    )
    if args.out:
        print(f"  report: {write_report(doc, args.out)}")
    return 0 if report.ok else 1


def _cmd_bench(args) -> int:
    sizes = tuple(int(s) for s in args.sizes.split(",") if s.strip())
    cfg = BenchConfig(
        sizes=sizes,
        variant=args.variant,
        random_runs=args.random_runs,
        rotation_runs=args.rotation_runs,
        seed=args.seed,
        collect_order=CollectOrder(args.collect_order or "asc"),
    )
    report = run_bench(cfg)
    result = {
        "cells": [
            {
                "n": c.n,
                "m": c.m,
                "max_scan_steps": c.max_scan_steps,
                "ratio": round(c.ratio, 4),
            }
            for c in report.cells
        ],
        "coefficient": round(report.coefficient, 4),
        "quiescent_scan_steps": report.quiescent_scan_steps,
        "elapsed_s": round(report.elapsed, 3),
    }
    scenario = Scenario(
        name=f"bench-{args.variant}",
        variant=args.variant,
        memory=("counter",),
        processes=(),
        collect_order=args.collect_order or "asc",
    )
    doc = make_report("bench", scenario, None, True, result)
    print(f"bench {args.variant}: coefficient={report.coefficient:.3f} "
          f"quiescent_solo_scan={report.quiescent_scan_steps} steps")
    for c in report.cells:
        print(f"  n={c.n} m={c.m}: max_scan_steps={c.max_scan_steps} "
              f"ratio={c.ratio:.3f}")
    if args.out:
        print(f"  report: {write_report(doc, args.out)}")
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "explore": _cmd_explore,
        "replay": _cmd_replay,
        "stress": _cmd_stress,
        "bench": _cmd_bench,
    }
    try:
        return handlers[args.command](args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
