"""Threaded stress harness with windowed correctness checking.

Unlike the simulator, which interleaves generator steps under a deterministic
scheduler, this module runs the same algorithm generators on real OS threads.
Each shared-cell access holds one global lock (so a step stays atomic, as the
register model requires), but the *order* of steps comes from the operating
system's scheduler.

Checking a multi-hour interleaving after the fact is hopeless, so the run is
cut into windows: every thread executes a fixed number of operations, then
parks on a barrier.  At the barrier the system is quiescent -- no operation is
in flight -- which makes each window a complete, self-contained history.  One
thread (the barrier action) then checks the window:

* a linearizability search over the window's recorded operations, seeded with
  the memory state the window started from and anchored by a virtual scan
  that observes the barrier-time state (so the window must also *end* in the
  right place);
* the independent state-timeline check on the same events.

Windows whose linearizability search exceeds its node budget are skipped and
counted, never silently dropped.  Response-time staleness (a scan answering a
view that never existed during the scan) is additionally checked inline, on
every scan, using the same seen-set discipline as the simulator.
"""

from __future__ import annotations

import random
import sys
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Optional

from .checker import LINEARIZABLE, OVERFLOW, check_linearizable, timeline_oracle_check
from .core import (
    Annotation,
    AlgoContext,
    ApplyEntry,
    CollectEnd,
    CollectOrder,
    HarnessDefect,
    IterBegin,
    PROGRESS,
    ReadCell,
    ReadEntry,
    ScanBegin,
    ScanEnd,
    ScenarioError,
    SnapshotView,
    UNJOINED,
    VARIANTS,
    VARIANT_FAMILY,
    WriteCell,
    apply_mutant,
    resolve_object_types,
)
from .history import Event, History
from .sim import _algorithm


#: Random argument generators for the bundled object types' operations.
_ARG_SAMPLERS = {
    ("counter", "add"): lambda rng: (rng.randint(1, 9),),
    ("register", "write"): lambda rng: (rng.randint(0, 99),),
    ("maxreg", "maxwrite"): lambda rng: (rng.randint(0, 999),),
    ("log", "append"): lambda rng: (rng.randint(0, 9),),
}


def _sample_update(rng: random.Random, typ) -> tuple[str, tuple]:
    ops = sorted(typ.ops)
    op = ops[rng.randrange(len(ops))]
    sampler = _ARG_SAMPLERS.get((typ.name, op))
    if sampler is None:
        raise ScenarioError(f"no workload sampler for {typ.name}.{op}")
    return op, sampler(rng)


@dataclass(frozen=True)
class StressConfig:
    """A threaded mixed-workload run."""

    variant: str = "conc-wf"
    memory: tuple[str, ...] = ("counter", "counter")
    threads: int = 8
    ops_per_thread: int = 1250
    window: int = 25  # ops per thread per checking window
    scan_ratio: float = 0.3
    seed: int = 1
    mutant: Optional[str] = None
    collect_order: CollectOrder = field(default_factory=lambda: CollectOrder("asc"))
    capacity: int = 0  # unbounded registry size; 0 means thread count
    check_node_budget: int = 500_000

    @property
    def family(self) -> str:
        return VARIANT_FAMILY[self.variant]

    @property
    def total_ops(self) -> int:
        return self.threads * self.ops_per_thread

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise ScenarioError(f"unknown variant {self.variant!r}")
        if self.threads < 1:
            raise ScenarioError("need at least one thread")
        if self.family == "solo" and self.threads != 1:
            raise ScenarioError("the solo-updater algorithms take exactly one thread")
        if self.ops_per_thread < 1 or self.window < 1:
            raise ScenarioError("ops_per_thread and window must be positive")
        if self.ops_per_thread % self.window:
            raise ScenarioError("ops_per_thread must be a multiple of window")
        if not 0.0 <= self.scan_ratio <= 1.0:
            raise ScenarioError("scan_ratio must be within [0, 1]")
        resolve_object_types(self.memory)


@dataclass
class WindowIssue:
    window: int
    source: str  # "linearizability" | "timeline" | "response-time"
    detail: Any


@dataclass
class StressReport:
    threads: int
    ops: int
    windows: int
    checked_windows: int
    skipped_windows: int
    violations: list[WindowIssue]
    max_scan_iterations: int
    max_nested_iterations: int
    iteration_bound: Optional[int]
    bound_exceeded: int
    scans_completed: int
    updates_completed: int
    elapsed: float

    @property
    def ok(self) -> bool:
        return not self.violations and not self.bound_exceeded

    @property
    def throughput(self) -> float:
        return self.ops / self.elapsed if self.elapsed > 0 else 0.0


class _LiveFrame:
    __slots__ = ("seen", "nested", "iterations")

    def __init__(self, seen: set, nested: bool):
        self.seen = seen
        self.nested = nested
        self.iterations = 0


class StressRunner:
    """Drives :class:`StressConfig` on real threads.  Single use."""

    ANCHOR_PID = 0  # synthetic observer closing each window

    def __init__(self, cfg: StressConfig):
        cfg.validate()
        self.cfg = cfg
        self.rules = apply_mutant(VARIANTS[cfg.variant], cfg.mutant, cfg.family)
        self.algo = _algorithm(cfg.family, self.rules)
        self.types = resolve_object_types(cfg.memory)
        n = cfg.threads
        capacity = cfg.capacity or n
        self.progress = self.algo.progress_slots(n, capacity)
        self.help = self.algo.help_slots(n, capacity)
        if self.algo.has_join:
            for pid in range(1, n + 1):  # threads start registered
                self.progress[pid - 1] = 0
        self.mem = [t.initial for t in self.types]
        self.lock = threading.Lock()
        self.seq = 0
        self.events: list[Event] = []
        self.window_start_state = tuple(self.mem)
        self.window_index = 0
        self.live_frames: set[_LiveFrame] = set()
        self.issues: list[WindowIssue] = []
        self.checked_windows = 0
        self.skipped_windows = 0
        self.max_scan_iterations = 0
        self.max_nested_iterations = 0
        self.bound_exceeded = 0
        self.scans_completed = 0
        self.updates_completed = 0
        self.scan_bound = self.algo.iteration_bound(n)
        self.errors: list[BaseException] = []
        self.barrier = threading.Barrier(n, action=self._close_window)

    # -- shared-cell step execution (the linearization points) ----------------

    def _exec_step(self, pid: int, opid: str, req) -> Any:
        with self.lock:
            self.seq += 1
            if isinstance(req, ReadCell):
                cells = self.progress if req.family == PROGRESS else self.help
                if req.index > len(cells):
                    return UNJOINED if req.family == PROGRESS else None
                return cells[req.index - 1]
            if isinstance(req, WriteCell):
                cells = self.progress if req.family == PROGRESS else self.help
                while req.index > len(cells):
                    cells.append(UNJOINED if req.family == PROGRESS else None)
                cells[req.index - 1] = req.value
                return None
            if isinstance(req, ReadEntry):
                return self.mem[req.index - 1]
            if isinstance(req, ApplyEntry):
                old = self.mem[req.index - 1]
                new, result = self.types[req.index - 1].apply(old, req.op, req.args)
                self.mem[req.index - 1] = new
                state = tuple(self.mem)
                for frame in self.live_frames:
                    frame.seen.add(state)
                self.events.append(
                    Event(
                        self.seq,
                        "step",
                        pid,
                        {
                            "opid": opid,
                            "op": "apply",
                            "entry": req.index,
                            "name": req.op,
                            "args": list(req.args),
                            "old": old,
                            "new": new,
                            "result": result,
                        },
                    )
                )
                return result
            raise HarnessDefect(f"unknown step request {req!r}")

    def _record(self, kind: str, pid: int, data: dict) -> None:
        with self.lock:
            self.seq += 1
            self.events.append(Event(self.seq, kind, pid, data))

    # -- annotations (processed by the executing thread) -----------------------

    def _annotate(self, pid: int, opid: str, frames: list, a: Annotation) -> Any:
        if isinstance(a, ScanBegin):
            with self.lock:
                frame = _LiveFrame({tuple(self.mem)}, a.nested)
                frames.append(frame)
                self.live_frames.add(frame)
            return None
        if isinstance(a, IterBegin):
            frames[-1].iterations = a.number
            return None
        if isinstance(a, CollectEnd):
            return SnapshotView(a.states)
        if isinstance(a, ScanEnd):
            frame = frames.pop()
            with self.lock:
                self.live_frames.discard(frame)
                stale = (
                    a.view is not None and a.view.states not in frame.seen
                )
                if a.view is None or stale:
                    self.issues.append(
                        WindowIssue(
                            self.window_index,
                            "response-time",
                            {
                                "opid": opid,
                                "path": a.path,
                                "view": None if a.view is None else a.view.states,
                                "kind": "empty-view" if a.view is None else "stale-view",
                            },
                        )
                    )
                if frame.nested:
                    self.max_nested_iterations = max(
                        self.max_nested_iterations, a.iterations
                    )
                else:
                    self.max_scan_iterations = max(
                        self.max_scan_iterations, a.iterations
                    )
                if (
                    self.rules.wait_free
                    and self.scan_bound is not None
                    and a.iterations > self.scan_bound
                ):
                    self.bound_exceeded += 1
            return None
        return None

    # -- per-thread operation loop --------------------------------------------

    def _drive(self, pid: int, ctx: AlgoContext, frames: list, opid: str, gen) -> Any:
        item = next(gen)
        while True:
            if isinstance(item, Annotation):
                feed = self._annotate(pid, opid, frames, item)
            else:
                feed = self._exec_step(pid, opid, item)
            try:
                item = gen.send(feed)
            except StopIteration as exc:
                return exc.value

    def _thread_main(self, pid: int) -> None:
        cfg = self.cfg
        rng = random.Random((cfg.seed * 1_000_003) ^ pid)
        frames: list[_LiveFrame] = []
        m = len(cfg.memory)
        try:
            for k in range(cfg.ops_per_thread):
                ctx = AlgoContext(
                    pid=pid,
                    n=cfg.threads,
                    m=m,
                    rules=self.rules,
                    order=cfg.collect_order,
                    op_ordinal=k,
                )
                opid = f"{pid}:{k}"
                if rng.random() < cfg.scan_ratio:
                    self._record("inv", pid, {"opid": opid, "op": "scan"})
                    view = self._drive(pid, ctx, frames, opid, self.algo.make_scan(ctx))
                    self._record(
                        "resp",
                        pid,
                        {
                            "opid": opid,
                            "op": "scan",
                            "view": None if view is None else view.states,
                        },
                    )
                    with self.lock:
                        self.scans_completed += 1
                else:
                    entry = rng.randrange(m) + 1
                    op, args = _sample_update(rng, self.types[entry - 1])
                    self._record(
                        "inv",
                        pid,
                        {
                            "opid": opid,
                            "op": "update",
                            "entry": entry,
                            "name": op,
                            "args": list(args),
                        },
                    )
                    result = self._drive(
                        pid, ctx, frames, opid,
                        self.algo.make_update(ctx, entry, op, args),
                    )
                    self._record(
                        "resp", pid, {"opid": opid, "op": "update", "result": result}
                    )
                    with self.lock:
                        self.updates_completed += 1
                if (k + 1) % cfg.window == 0:
                    self.barrier.wait()
        except threading.BrokenBarrierError:
            pass  # another thread failed; its error is already recorded
        except BaseException as exc:  # noqa: BLE001 - surfaced after join
            with self.lock:
                self.errors.append(exc)
            self.barrier.abort()

    # -- window checking (barrier action; system is quiescent here) ------------

    def _close_window(self) -> None:
        state = tuple(self.mem)
        events = self.events
        self.events = []
        anchor = f"{self.ANCHOR_PID}:w{self.window_index}"
        events.append(
            Event(self.seq + 1, "inv", self.ANCHOR_PID, {"opid": anchor, "op": "scan"})
        )
        events.append(
            Event(
                self.seq + 2,
                "resp",
                self.ANCHOR_PID,
                {"opid": anchor, "op": "scan", "view": list(state)},
            )
        )
        self.seq += 2
        history = History(
            memory=self.cfg.memory,
            events=events,
            start_state=self.window_start_state,
        )
        result = check_linearizable(history, node_budget=self.cfg.check_node_budget)
        if result.verdict == OVERFLOW:
            self.skipped_windows += 1
        else:
            self.checked_windows += 1
            if result.verdict != LINEARIZABLE:
                self.issues.append(
                    WindowIssue(
                        self.window_index,
                        "linearizability",
                        {"verdict": result.verdict, "evidence": result.evidence},
                    )
                )
        oracle = timeline_oracle_check(history)
        if not oracle.ok:
            self.issues.append(
                WindowIssue(
                    self.window_index,
                    "timeline",
                    {"violations": [v.detail for v in oracle.violations]},
                )
            )
        self.window_start_state = state
        self.window_index += 1

    # -- entry point -----------------------------------------------------------

    def run(self) -> StressReport:
        old_interval = sys.getswitchinterval()
        sys.setswitchinterval(1e-5)  # force frequent thread preemption
        started = time.perf_counter()
        try:
            threads = [
                threading.Thread(
                    target=self._thread_main, args=(pid,), name=f"stress-{pid}"
                )
                for pid in range(1, self.cfg.threads + 1)
            ]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
        finally:
            sys.setswitchinterval(old_interval)
        elapsed = time.perf_counter() - started
        if self.errors:
            raise self.errors[0]
        return StressReport(
            threads=self.cfg.threads,
            ops=self.cfg.total_ops,
            windows=self.window_index,
            checked_windows=self.checked_windows,
            skipped_windows=self.skipped_windows,
            violations=self.issues,
            max_scan_iterations=self.max_scan_iterations,
            max_nested_iterations=self.max_nested_iterations,
            iteration_bound=self.scan_bound,
            bound_exceeded=self.bound_exceeded,
            scans_completed=self.scans_completed,
            updates_completed=self.updates_completed,
            elapsed=elapsed,
        )


def run_stress(cfg: StressConfig) -> StressReport:
    return StressRunner(cfg).run()
