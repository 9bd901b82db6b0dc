"""Hand-built schedules that pin down algorithm behaviors.

Each demo drives one execution through a :class:`~rwsnap.director.Director`
and returns the recorded run plus the facts it establishes.  They fall into
two groups:

* **Mutant counterexamples** -- shortest known interleavings on which a
  bundled mutant returns a provably non-linearizable view.  Each has an
  unmutated twin run showing the dropped safeguard catching the same attack.
* **Liveness extremes** -- schedules exhibiting starvation of the lock-free
  and blocking scans, wait-free borrowing, and unbounded-concurrency scans
  surviving a stream of crashing fresh joiners.

All demos are deterministic: same tokens, same history bytes, every time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

from .core import (
    HELP,
    PROGRESS,
    ApplyEntry,
    ReadCell,
    ReadEntry,
    VARIANTS,
    WriteCell,
    apply_mutant,
)
from .director import Director, DirectorError
from .sim import Execution, OpSpec, SimConfig


@dataclass
class DemoRun:
    """One hand-driven execution with the facts it demonstrates."""

    name: str
    config: SimConfig
    tokens: tuple[str, ...]
    facts: dict = field(default_factory=dict)
    execution: Optional[Execution] = None

    @property
    def violations(self):
        return self.execution.violations


def _finish(name: str, d: Director, **facts: Any) -> DemoRun:
    stats = d.ex.stats
    top_paths = {
        k: v for k, v in stats.scan_paths.items() if not k.startswith("nested:")
    }
    base = {
        "violations": [(v.kind, v.opid) for v in d.ex.violations],
        "scan_paths": top_paths,
        "scan_iterations": stats.max_scan_iterations,
        "updates_completed": stats.updates_completed,
    }
    base.update(facts)
    return DemoRun(name, d.ex.cfg, tuple(d.tokens), base, d.ex)


def _conc_cfg(variant: str, mutant: Optional[str], memory, scripts) -> SimConfig:
    rules = apply_mutant(VARIANTS[variant], mutant, "concurrent")
    return SimConfig(
        family="concurrent", rules=rules, memory=memory, scripts=scripts, record=True
    )


# ---------------------------------------------------------------------------
# Mutant counterexamples
# ---------------------------------------------------------------------------


def _aba_scripts() -> dict[int, tuple[OpSpec, ...]]:
    """Register workload that can restore old values (value recurrence)."""
    w = lambda entry, value: OpSpec("update", entry, "write", (value,))
    return {
        1: (OpSpec("scan"),),
        2: (w(1, 4), w(1, 5), w(1, 4), w(1, 6)),
        3: (w(2, 7), w(2, 9), w(2, 7)),
    }


def _drive_aba(d: Director) -> None:
    """Interleaving that makes both rescue re-collect reads see restored values.

    The scan's first collect reads entry 1 between the first two writers and
    entry 2 just after the third writer's apply.  By the time the rescue
    re-collect re-reads each entry its value has moved on and come *back*
    (4 -> 5 -> 4 on entry 1, 7 -> 9 -> 7 on entry 2), with the restoring
    writes real-time-separated so no single moment holds the collected pair.
    """
    d.run_op(2)                                   # write e1=4, completes
    d.run_until_pending(2, ApplyEntry)            # write e1=5 armed mid-flight
    d.run_until_pending(1, ReadEntry)             # scan first counter collect
    d.step(1)                                     # scan reads e1 -> 4
    d.finish_op(2)                                # e1=5 lands, writer responds
    d.run_until_pending(3, ApplyEntry)            # write e2=7 armed
    d.step(3)                                     # e2=7 lands (op still open)
    d.step(1)                                     # scan reads e2 -> 7
    d.run_until_pending(1, ReadEntry)             # after-collect: steady, 2
    #                                             # possible writers -> rescue
    d.finish_op(3)                                # e2-writer responds
    d.run_op(3)                                   # write e2=9, completes
    d.run_until_pending(2, ApplyEntry)            # write e1=4 armed (restores)
    d.step(2)                                     # e1 back to 4
    d.step(1)                                     # rescue re-reads e1 -> 4
    d.finish_op(2)                                # restorer responds
    d.run_op(2)                                   # write e1=6, completes
    d.run_op(3)                                   # write e2=7, completes (restores)
    d.step(1)                                     # rescue re-reads e2 -> 7: equal


def drop_third_collect_counterexample() -> DemoRun:
    """Without the settling counter check, equal re-collects are trusted --
    and value restoration makes them equal without any instant holding them."""
    cfg = _conc_cfg("conc-wf", "drop-third-collect", ("register", "register"), _aba_scripts())
    d = Director(cfg)
    _drive_aba(d)  # final step returns the scan: mutant skips the verify
    return _finish(
        "drop-third-collect-aba",
        d,
        view=d.scan_views(1)[0] if d.scan_views(1) else None,
        note="scan answered (4, 7); entries never held those values together",
    )


def drop_third_collect_contrast() -> DemoRun:
    """Same drive, unmutated: the third counter collect sees the writers'
    progress, rejects the settled claim, and the scan borrows a valid view."""
    cfg = _conc_cfg("conc-wf", None, ("register", "register"), _aba_scripts())
    d = Director(cfg)
    _drive_aba(d)
    d.finish_op(1)  # verify fails -> moves tally -> borrow a published view
    return _finish(
        "drop-third-collect-contrast",
        d,
        view=d.scan_views(1)[0] if d.scan_views(1) else None,
    )


def _weak_threshold_setup(mutant: Optional[str]) -> Director:
    scripts = {
        1: (OpSpec("scan"),),
        2: (OpSpec("update", 1, "add", (1,)), OpSpec("update", 1, "add", (1,))),
        3: (OpSpec("update", 2, "add", (5,)),),
    }
    cfg = _conc_cfg("conc-wf", mutant, ("counter", "counter"), scripts)
    d = Director(cfg)
    d.run_until_pending(2, ApplyEntry)   # first add armed; help view (0, 0)
    #                                    # published before the scan begins
    d.run_op(3)                          # add(entry 2, 5) completes: e2=5
    d.run_until_pending(1, ReadEntry)    # scan first counter collect
    d.step(1, 2)                         # scan collects memory: (0, 5)
    d.finish_op(2)                       # first add lands e1=1, responds
    # second add: bump the counter but stop before the nested collect would
    # refresh the help slot -- it still holds the pre-scan view (0, 0)
    d.run_until_pending(2, ReadCell, family=PROGRESS, index=1)
    return d


def weak_threshold_counterexample() -> DemoRun:
    """Threshold 2 lets a scan borrow help that predates its own start."""
    d = _weak_threshold_setup("weak-help-threshold")
    # after-collect sees two counter increments: at threshold 2 the next
    # loop entry immediately borrows the (stale) help slot
    d.run_until_pending(1, ReadCell, family=HELP, index=2)
    d.step(1)  # borrow (0, 0): predates the already-answered add of 5
    run = _finish(
        "weak-threshold-borrow",
        d,
        view=d.scan_views(1)[0] if d.scan_views(1) else None,
    )
    d.finish_op(2)  # let the second add drain for a complete history
    run.tokens = tuple(d.tokens)
    return run


def weak_threshold_contrast() -> DemoRun:
    """At threshold 4 the same two observed increments are not enough; the
    scan keeps collecting and answers a current view."""
    d = _weak_threshold_setup(None)
    d.finish_op(2)       # second add completes
    d.finish_op(1)       # scan finishes against a quiet memory
    return _finish(
        "weak-threshold-contrast",
        d,
        view=d.scan_views(1)[0] if d.scan_views(1) else None,
    )


def _joiner_guard_setup(mutant: Optional[str]) -> Director:
    rules = apply_mutant(VARIANTS["unbounded"], mutant, "unbounded")
    cfg = SimConfig(
        family="unbounded",
        rules=rules,
        memory=("counter", "counter"),
        scripts={
            1: (OpSpec("scan"),),
            2: (
                OpSpec("join"),
                OpSpec("update", 1, "add", (1,)),
                OpSpec("update", 2, "add", (2,)),
            ),
        },
        capacity=2,
        initial_joined=frozenset({1}),
        record=True,
    )
    d = Director(cfg)
    d.run_until_pending(1, ReadEntry, index=2)  # probe saw only us; e1 read 0
    d.run_op(2)                                  # join
    d.run_op(2)                                  # add(e1, 1): e1=1, help set
    d.run_until_pending(2, ApplyEntry)           # add(e2, 2) mid-flight
    d.step(2)                                    # e2=2 lands, counter odd
    d.step(1)                                    # scan reads e2 -> 2
    return d


def no_joiner_guard_counterexample() -> DemoRun:
    """Without the fresh-joiner guard a scan accepts a collect whose halves
    straddle a joiner's whole first update."""
    d = _joiner_guard_setup("no-joiner-guard")
    d.finish_op(1)  # after-collect: joiner ignored -> (0, 2) answered
    run = _finish(
        "no-joiner-guard-straddle",
        d,
        view=d.scan_views(1)[0] if d.scan_views(1) else None,
    )
    d.finish_op(2)
    run.tokens = tuple(d.tokens)
    return run


def no_joiner_guard_contrast() -> DemoRun:
    """Guard on: the joiner's advanced counter voids the collect; the next
    loop entry returns the joiner's own published view instead."""
    d = _joiner_guard_setup(None)
    d.finish_op(1)  # unsteady -> loop -> borrow the newcomer's help
    run = _finish(
        "no-joiner-guard-contrast",
        d,
        view=d.scan_views(1)[0] if d.scan_views(1) else None,
    )
    d.finish_op(2)
    run.tokens = tuple(d.tokens)
    return run


def no_help_publish_counterexample() -> DemoRun:
    """Borrowing from a process that never published help returns nothing."""
    scripts = {
        1: (OpSpec("scan"),),
        2: (OpSpec("update", 1, "add", (1,)), OpSpec("update", 1, "add", (1,))),
    }
    cfg = _conc_cfg("conc-wf", "no-help-publish", ("counter",), scripts)
    d = Director(cfg)
    d.run_until_pending(1, ReadEntry)   # scan first counter collect
    d.run_op(2)
    d.run_op(2)                         # four counter increments land
    d.step(1)                           # scan reads memory
    # after-collect sees all four increments -> borrow fires next entry
    d.run_until_pending(1, ReadCell, family=HELP, index=2)
    d.step(1)                           # help slot is empty: scan answers nothing
    return _finish(
        "no-help-publish-empty",
        d,
        view=d.scan_views(1)[0] if d.scan_views(1) else None,
    )


MUTANT_COUNTEREXAMPLES = {
    "no-help-publish": no_help_publish_counterexample,
    "drop-third-collect": drop_third_collect_counterexample,
    "weak-help-threshold": weak_threshold_counterexample,
    "no-joiner-guard": no_joiner_guard_counterexample,
}

MUTANT_CONTRASTS = {
    "drop-third-collect": drop_third_collect_contrast,
    "weak-help-threshold": weak_threshold_contrast,
    "no-joiner-guard": no_joiner_guard_contrast,
}


# ---------------------------------------------------------------------------
# Liveness extremes
# ---------------------------------------------------------------------------


def _starve(d: Director, scan_pid: int, upd_pid: int, rounds: int) -> int:
    """Interleave one full update into every scan loop iteration.

    Returns the number of updates actually interleaved (the scan may answer
    early, e.g. by borrowing).
    """
    d.run_until_pending(scan_pid, ReadEntry)
    done = 0
    for _ in range(rounds):
        d.run_op(upd_pid)
        done += 1
        d.step(scan_pid)  # the entry read the update just invalidated
        if not d.ex.machines[scan_pid].started:
            return done
        if d.run_until_pending(scan_pid, ReadEntry, allow_response=True) is None:
            return done
    return done


def starved_lockfree_demo(updates: int = 12) -> DemoRun:
    """Lock-free scan: every interleaved update voids the double collect, yet
    the system as a whole keeps completing operations."""
    scripts = {
        1: (OpSpec("scan"),),
        2: tuple(OpSpec("update", 1, "add", (1,)) for _ in range(updates)),
    }
    cfg = _conc_cfg("conc-lf", None, ("counter",), scripts)
    d = Director(cfg)
    interleaved = _starve(d, 1, 2, updates)
    if d.ex.machines[1].started:
        d.finish_op(1)  # updater script exhausted; quiet collect answers
    return _finish(
        "starved-lockfree",
        d,
        interleaved_updates=interleaved,
        view=d.scan_views(1)[0] if d.scan_views(1) else None,
    )


def blocking_scan_demo(budget: int = 50) -> DemoRun:
    """Blocking scan: with no rescue path, continuous updates push the loop
    past any finite budget."""
    updates = budget + 2
    scripts = {
        1: (OpSpec("scan"),),
        2: tuple(OpSpec("update", 1, "add", (1,)) for _ in range(updates)),
    }
    cfg = _conc_cfg("conc-blocking", None, ("counter",), scripts)
    d = Director(cfg)
    interleaved = _starve(d, 1, 2, updates)
    if d.ex.machines[1].started:
        d.finish_op(1)
    return _finish(
        "blocking-scan-starved",
        d,
        budget=budget,
        interleaved_updates=interleaved,
        exceeded_budget=d.ex.stats.max_scan_iterations > budget,
        view=d.scan_views(1)[0] if d.scan_views(1) else None,
    )


def waitfree_borrow_demo() -> DemoRun:
    """Wait-free scan under the same starvation pattern: after four observed
    counter increments it borrows a published view and answers."""
    scripts = {
        1: (OpSpec("scan"),),
        2: tuple(OpSpec("update", 1, "add", (1,)) for _ in range(8)),
    }
    cfg = _conc_cfg("conc-wf", None, ("counter",), scripts)
    d = Director(cfg)
    interleaved = _starve(d, 1, 2, 8)
    if d.ex.machines[1].started:
        d.finish_op(1)
    run = _finish(
        "waitfree-borrow",
        d,
        interleaved_updates=interleaved,
        view=d.scan_views(1)[0] if d.scan_views(1) else None,
    )
    d.run_remaining()  # drain the rest of the updater's script
    run.tokens = tuple(d.tokens)
    return run


def adversarial_joiners_demo() -> DemoRun:
    """Unbounded scan against a relay of crashing adversaries.

    Four pre-registered processes take turns poisoning one scan loop
    iteration each: run one full update, start a second, publish help, crash
    with the progress counter stuck odd.  A fifth, fresh process then joins
    mid-scan and does the same.  No single process ever shows four counter
    increments, so the usual borrow trigger stays cold -- the scan answers
    through the fresh-joiner borrow instead, with the newcomer's published
    view from inside the scan's own interval.
    """
    adversaries = (2, 3, 4, 5)
    scripts: dict[int, tuple[OpSpec, ...]] = {1: (OpSpec("scan"),)}
    for a in adversaries:
        scripts[a] = (
            OpSpec("update", 1, "add", (10 * a,)),
            OpSpec("update", 1, "add", (10 * a + 1,)),
        )
    scripts[6] = (
        OpSpec("join"),
        OpSpec("update", 1, "add", (100,)),
        OpSpec("update", 1, "add", (101,)),
    )
    cfg = SimConfig(
        family="unbounded",
        rules=VARIANTS["unbounded"],
        memory=("counter",),
        scripts=scripts,
        capacity=8,
        initial_joined=frozenset({1, 2, 3, 4, 5}),
        record=True,
    )
    d = Director(cfg)
    d.run_until_pending(1, ReadEntry)  # iteration 1 pauses at the entry read
    poisoned = 0
    for a in adversaries:
        d.run_op(a)                    # first update completes: counter even
        d.run_until_pending(a, WriteCell, family=PROGRESS, value=4)
        d.crash(a)                     # second update dies applied-but-open
        poisoned += 1
        d.step(1)                      # entry read
        d.run_until_pending(1, ReadEntry)  # stuck-odd newcomer voids collect
    d.run_op(6)                        # fresh process registers mid-scan
    d.run_op(6)                        # its first update completes
    d.run_until_pending(6, WriteCell, family=PROGRESS, value=4)
    d.crash(6)                         # and its second dies like the others
    poisoned += 1
    d.step(1)
    d.finish_op(1)                     # joiner-borrow answers the scan
    return _finish(
        "adversarial-joiners",
        d,
        poisoned_iterations=poisoned,
        view=d.scan_views(1)[0] if d.scan_views(1) else None,
        crashed=[p for p, m in d.ex.machines.items() if m.crashed],
    )
