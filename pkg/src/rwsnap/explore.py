"""Schedule-space exploration: exhaustive, preemption-bounded, and random.

The exhaustive and preemption-bounded modes run a depth-first search over
scheduler choices with *state merging*: two search nodes whose executions have
equal :meth:`rwsnap.sim.Execution.merge_key` have identical futures -- the
same reachable interleavings, the same step results, and the same residual
correctness verdicts -- so the subtree is explored once and its schedule
count is reused.  The number of distinct schedules covered is still counted
exactly, by dynamic programming over the merged graph (a node's count is the
sum of its children's counts; terminals count one).

Merging is sound for verdicts because every ingredient of a future verdict is
part of the key: the shared cells and memory, each process's script position,
its per-operation observation sequence (which determines the whole private
state of its operation code), and the set of memory states each live scan has
witnessed (which determines whether any future scan completion is valid).
Consequently violation *detection* is exact; violation *multiplicity* is
reported per merged state, not per schedule.

Crash injection adds "crash this process" edges (up to a budget) and join
injection is exercised by scripting join operations; both are ordinary
scheduler choices, so they compose with every mode.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Optional

from .core import ExplorationOverflow, HarnessDefect
from .sim import Execution, SimConfig, Stats, crash_token, run_schedule

DEFAULT_STATE_BUDGET = 4_000_000
DEFAULT_MAX_RECORDED = 25


@dataclass(frozen=True)
class ViolationReport:
    kind: str
    pid: int
    opid: str
    detail: dict
    schedule: tuple  # token sequence reproducing the violation


@dataclass
class ExploreReport:
    mode: str  # "exhaustive" | "preemption" | "random"
    schedules: int  # distinct schedules covered (exact) or runs performed
    states: int  # merged states visited (search modes) or 0
    complete: bool  # whole space covered without budget overflow
    violations: list[ViolationReport] = field(default_factory=list)
    violation_states: int = 0  # merged states (or runs) with >= 1 violation
    stats: Stats = field(default_factory=Stats)
    stuck: int = 0  # terminal states with unfinished, unblockable work
    cross_checked: int = 0
    elapsed: float = 0.0
    overflow_reason: Optional[str] = None

    @property
    def found_violation(self) -> bool:
        return bool(self.violations) or self.violation_states > 0


class _StopSearch(Exception):
    pass


class _Search:
    def __init__(
        self,
        cfg: SimConfig,
        *,
        preemption_bound: Optional[int],
        max_crashes: int,
        state_budget: int,
        stop_on_violation: bool,
        max_recorded: int,
        cross_check: int,
        cross_validator=None,
    ):
        if cfg.record:
            raise HarnessDefect("explorer requires a non-recording configuration")
        self.cfg = cfg
        self.preemption_bound = preemption_bound
        self.max_crashes = max_crashes
        self.state_budget = state_budget
        self.stop_on_violation = stop_on_violation
        self.max_recorded = max_recorded
        self.cross_check = cross_check
        self.cross_validator = cross_validator
        self.memo: dict = {}
        self.stats = Stats()
        self.report_violations: list[ViolationReport] = []
        self.seen_violation_keys: set = set()
        self.violation_states = 0
        self.states = 0
        self.stuck = 0
        self.cross_checked = 0
        self.path: list = []

    def run(self) -> tuple[int, bool, Optional[str]]:
        ex = Execution(self.cfg)
        ex.stats = self.stats
        try:
            count = self._expand(ex, None, 0, 0)
            return count, True, None
        except _StopSearch:
            return 0, False, None
        except ExplorationOverflow as exc:
            return 0, False, str(exc)

    # -- internals ------------------------------------------------------------

    def _expand(self, ex: Execution, last_pid, preemptions: int, crashes: int) -> int:
        key = ex.merge_key()
        if self.preemption_bound is not None:
            key = (key, last_pid, preemptions)
        cached = self.memo.get(key)
        if cached is not None:
            return cached
        self.states += 1
        if self.states > self.state_budget:
            raise ExplorationOverflow(
                f"state budget of {self.state_budget} merged states exceeded"
            )
        runnable = ex.runnable()
        if not runnable:
            if not ex.completed:
                self.stuck += 1
            if self.cross_validator is not None and self.cross_checked < self.cross_check:
                self.cross_checked += 1
                self.cross_validator(self.cfg, tuple(self.path))
            self.memo[key] = 1
            return 1
        # build the edge list first so the last edge can reuse ``ex`` in
        # place -- that child needs no snapshot restore and, crucially, no
        # generator rebuild, which dominates the cost otherwise
        edges: list = []
        for pid in runnable:
            next_preempt = preemptions
            if self.preemption_bound is not None and last_pid is not None:
                if pid != last_pid and last_pid in runnable:
                    if preemptions >= self.preemption_bound:
                        continue
                    next_preempt = preemptions + 1
            edges.append((pid, pid, next_preempt, crashes))
        if crashes < self.max_crashes:
            for pid in ex.crashable():
                # a crash does not count as a preemption: the crashed
                # process cannot be "resumed instead"
                nxt = last_pid if last_pid != pid else None
                edges.append((crash_token(pid), nxt, preemptions, crashes + 1))
        total = 0
        snap = ex.snapshot() if len(edges) > 1 else None
        base_violations = len(ex.violations)
        for i, (token, next_last, next_preempt, next_crashes) in enumerate(edges):
            if i + 1 == len(edges):
                child = ex
            else:
                child = Execution.restore(self.cfg, snap)
                child.stats = self.stats
            self.path.append(token)
            try:
                if isinstance(token, str):
                    child.crash(int(token.split(":", 1)[1]))
                else:
                    child.perform(token)
                    self._note_violations(child, base_violations)
                total += self._expand(child, next_last, next_preempt, next_crashes)
            finally:
                self.path.pop()
        self.memo[key] = total
        return total

    def _note_violations(self, ex: Execution, base: int) -> None:
        new = ex.violations[base:]
        if not new:
            return
        self.violation_states += 1
        for v in new:
            dedup = (v.kind, v.opid)
            if dedup in self.seen_violation_keys:
                continue
            if len(self.report_violations) < self.max_recorded:
                self.seen_violation_keys.add(dedup)
                self.report_violations.append(
                    ViolationReport(
                        kind=v.kind,
                        pid=v.pid,
                        opid=v.opid,
                        detail=dict(v.detail),
                        schedule=tuple(self.path),
                    )
                )
        if self.stop_on_violation:
            raise _StopSearch()


def merged_explore(
    cfg: SimConfig,
    *,
    preemption_bound: Optional[int] = None,
    max_crashes: int = 0,
    state_budget: int = DEFAULT_STATE_BUDGET,
    stop_on_violation: bool = False,
    max_recorded: int = DEFAULT_MAX_RECORDED,
    cross_check: int = 0,
    cross_validator=None,
) -> ExploreReport:
    """Explore every schedule (optionally preemption-bounded, with crashes)."""
    t0 = time.perf_counter()
    search = _Search(
        cfg,
        preemption_bound=preemption_bound,
        max_crashes=max_crashes,
        state_budget=state_budget,
        stop_on_violation=stop_on_violation,
        max_recorded=max_recorded,
        cross_check=cross_check,
        cross_validator=cross_validator,
    )
    count, complete, reason = search.run()
    return ExploreReport(
        mode="exhaustive" if preemption_bound is None else "preemption",
        schedules=count,
        states=search.states,
        complete=complete,
        violations=search.report_violations,
        violation_states=search.violation_states,
        stats=search.stats,
        stuck=search.stuck,
        cross_checked=search.cross_checked,
        elapsed=time.perf_counter() - t0,
        overflow_reason=reason,
    )


def random_explore(
    cfg: SimConfig,
    *,
    runs: int,
    seed: int,
    max_crashes: int = 0,
    crash_prob: float = 0.02,
    stop_on_violation: bool = False,
    max_recorded: int = DEFAULT_MAX_RECORDED,
    cross_check: int = 0,
    cross_validator=None,
) -> ExploreReport:
    """Run ``runs`` independent schedules from a seeded generator."""
    if cfg.record:
        raise HarnessDefect("explorer requires a non-recording configuration")
    t0 = time.perf_counter()
    rng = random.Random(seed)
    stats = Stats()
    violations: list[ViolationReport] = []
    seen_keys: set = set()
    bad_runs = 0
    stuck = 0
    cross_checked = 0
    performed = 0
    for _ in range(runs):
        performed += 1
        ex = Execution(cfg)
        ex.stats = stats
        path: list = []
        crashes = 0
        while True:
            runnable = ex.runnable()
            if not runnable:
                break
            if max_crashes > crashes and rng.random() < crash_prob:
                targets = ex.crashable()
                if targets:
                    pid = targets[rng.randrange(len(targets))]
                    ex.crash(pid)
                    path.append(crash_token(pid))
                    crashes += 1
                    continue
            pid = runnable[rng.randrange(len(runnable))]
            path.append(pid)
            ex.perform(pid)
        if not ex.completed:
            stuck += 1
        if ex.violations:
            bad_runs += 1
            for v in ex.violations:
                dedup = (v.kind, v.opid)
                if dedup not in seen_keys and len(violations) < max_recorded:
                    seen_keys.add(dedup)
                    violations.append(
                        ViolationReport(
                            v.kind, v.pid, v.opid, dict(v.detail), tuple(path)
                        )
                    )
            if stop_on_violation:
                break
        elif cross_validator is not None and cross_checked < cross_check:
            cross_checked += 1
            cross_validator(cfg, tuple(path))
    return ExploreReport(
        mode="random",
        schedules=performed,
        states=0,
        complete=performed == runs,
        violations=violations,
        violation_states=bad_runs,
        stats=stats,
        stuck=stuck,
        cross_checked=cross_checked,
        elapsed=time.perf_counter() - t0,
    )


def replay_schedule(cfg: SimConfig, tokens, *, record: bool = True) -> Execution:
    """Re-run a schedule with recording on (for reports and cross-checks)."""
    rec_cfg = cfg
    if cfg.record != record:
        from dataclasses import replace

        rec_cfg = replace(cfg, record=record)
    return run_schedule(rec_cfg, tokens)


def history_cross_validator(*, node_budget: int = 200_000):
    """Build a ``cross_validator`` callback for the explorers.

    The callback replays a sampled terminal schedule with recording on and
    judges the resulting history twice -- timeline oracle and
    linearizability checker.  Two failure modes raise ``HarnessDefect``
    rather than being reported as algorithm violations, because both can
    only come from a bug in the harness itself:

    * the judges disagree in the impossible direction (oracle passes,
      checker rejects);
    * the inline checks let the run finish clean, yet the checker rejects
      the recorded history.
    """
    from .checker import NOT_LINEARIZABLE, cross_validate

    def validate(cfg: SimConfig, tokens) -> None:
        ex = replay_schedule(cfg, tokens)
        history = ex.history()
        history.validate()
        rep = cross_validate(history, node_budget=node_budget)
        if not rep.consistent:
            raise HarnessDefect(
                "oracle and checker disagree on a replayed schedule: "
                f"oracle={rep.oracle.verdict} checker={rep.checker.verdict} "
                f"tokens={list(tokens)!r}"
            )
        if not ex.violations and rep.checker.verdict == NOT_LINEARIZABLE:
            raise HarnessDefect(
                "inline checks accepted a schedule the checker rejects: "
                f"tokens={list(tokens)!r}"
            )

    return validate
