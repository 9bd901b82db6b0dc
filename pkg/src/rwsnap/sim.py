"""Deterministic step-granular execution of snapshot algorithms.

The simulator runs each process's operations as generators that yield one
shared-memory access (a *step*) at a time.  A scheduler (explorer, replayer,
or test) picks which process performs its pending step next, giving full
control over interleavings.  Key design points:

* **Lazy operation start** -- a process's next operation is invoked only when
  the scheduler first picks that process, so an operation's interval begins at
  its first scheduled step and ends at its last.  Between-step choices never
  widen intervals.
* **Fork / restore** -- executions snapshot to immutable tuples and rebuild on
  demand.  Generators cannot be copied, so a restored machine rebuilds its
  generator by replaying the recorded per-operation observation sequence
  (values returned by its own past steps), which is deterministic.
* **Response-time checking** -- every live scan (top-level or nested inside a
  helping update) tracks the set of full-memory states that were current at
  some instant during its interval.  When the scan completes, its view must be
  one of those states; otherwise a violation is recorded immediately.  This
  check is exact and composes with state merging in the explorer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterator, Optional

from .core import (
    OK,
    PROGRESS,
    UNJOINED,
    AlgoContext,
    Annotation,
    ApplyEntry,
    CollectBegin,
    CollectEnd,
    CollectOrder,
    ExplorationOverflow,
    HarnessDefect,
    IterBegin,
    ParticipantCollect,
    ReadCell,
    ReadEntry,
    Ruleset,
    ScanBegin,
    ScanEnd,
    ScenarioError,
    SnapshotView,
    ViewMeta,
    WindowMark,
    WriteCell,
    resolve_object_types,
)
from .history import Event, History, Mark
from .snapshot_concurrent import ConcurrentAlgorithm
from .snapshot_solo import SoloAlgorithm
from .snapshot_unbounded import UnboundedAlgorithm

_FAMILIES = {
    "solo": SoloAlgorithm,
    "concurrent": ConcurrentAlgorithm,
    "unbounded": UnboundedAlgorithm,
}

_ALGO_CACHE: dict = {}


def _algorithm(family: str, rules):
    """Algorithm descriptors are stateless; share one instance per ruleset."""
    key = (family, rules)
    algo = _ALGO_CACHE.get(key)
    if algo is None:
        algo = _ALGO_CACHE.setdefault(key, _FAMILIES[family](rules))
    return algo


@dataclass(frozen=True)
class OpSpec:
    """One scripted operation for a process."""

    kind: str  # "update" | "scan" | "join"
    entry: int = 0
    name: str = ""
    args: tuple = ()


@dataclass(frozen=True)
class SimConfig:
    """Everything needed to run a system of scripted processes."""

    family: str
    rules: Ruleset
    memory: tuple[str, ...]
    scripts: dict[int, tuple[OpSpec, ...]]
    order: CollectOrder = CollectOrder("asc")
    capacity: int = 0  # registry capacity (unbounded family); 0 = auto
    initial_joined: frozenset = frozenset()  # pids pre-registered at time 0
    record: bool = False  # keep an event log (History)
    stamp_meta: bool = False  # attach ViewMeta to collected views
    iteration_cap: int = 1000  # safety cap on scan loop iterations

    @property
    def pids(self) -> tuple[int, ...]:
        return tuple(sorted(self.scripts))

    @property
    def n(self) -> int:
        return max(self.scripts) if self.scripts else 0

    def validate(self) -> None:
        if self.family not in _FAMILIES:
            raise ScenarioError(f"unknown algorithm family {self.family!r}")
        if not self.memory:
            raise ScenarioError("memory must have at least one entry")
        types = resolve_object_types(self.memory)
        if sorted(self.scripts) != list(range(1, len(self.scripts) + 1)):
            raise ScenarioError("process ids must be dense from 1")
        m = len(self.memory)
        for pid, script in self.scripts.items():
            for op in script:
                if op.kind == "update":
                    if not 1 <= op.entry <= m:
                        raise ScenarioError(
                            f"process {pid}: entry {op.entry} out of range 1..{m}"
                        )
                    try:
                        types[op.entry - 1].validate(op.name, op.args)
                    except ScenarioError as exc:
                        raise ScenarioError(f"process {pid}: {exc}")
                elif op.kind not in ("scan", "join"):
                    raise ScenarioError(f"process {pid}: unknown op kind {op.kind!r}")
                if op.kind == "join" and self.family != "unbounded":
                    raise ScenarioError("join ops only apply to the unbounded family")
        if self.family == "unbounded":
            joined = sorted(self.initial_joined)
            if joined != list(range(1, len(joined) + 1)):
                raise ScenarioError("initially joined pids must form a prefix 1..k")
            for pid, script in self.scripts.items():
                has_join = any(op.kind == "join" for op in script)
                if pid in self.initial_joined and has_join:
                    raise ScenarioError(f"process {pid} is pre-joined but scripts a join")
                if pid not in self.initial_joined:
                    if not script or script[0].kind != "join":
                        raise ScenarioError(
                            f"process {pid} must join before other operations"
                        )
                    if sum(1 for op in script if op.kind == "join") > 1:
                        raise ScenarioError(f"process {pid} joins more than once")


@dataclass(frozen=True)
class Violation:
    kind: str  # "stale-view" | "empty-view"
    pid: int
    opid: str
    seq: int
    detail: dict


@dataclass
class Stats:
    """Aggregate observations from one execution."""

    max_scan_iterations: int = 0  # over top-level scan operations
    max_nested_iterations: int = 0  # over scans nested in helping updates
    max_scan_steps: int = 0  # steps charged to one top-level scan op
    scan_paths: dict = field(default_factory=dict)  # return path -> count
    scans_completed: int = 0
    updates_completed: int = 0
    bound_exceeded: list = field(default_factory=list)

    def merge(self, other: "Stats") -> None:
        self.max_scan_iterations = max(self.max_scan_iterations, other.max_scan_iterations)
        self.max_nested_iterations = max(
            self.max_nested_iterations, other.max_nested_iterations
        )
        self.max_scan_steps = max(self.max_scan_steps, other.max_scan_steps)
        for k, v in other.scan_paths.items():
            self.scan_paths[k] = self.scan_paths.get(k, 0) + v
        self.scans_completed += other.scans_completed
        self.updates_completed += other.updates_completed
        self.bound_exceeded.extend(other.bound_exceeded)


class _Frame:
    """A live scan invocation (top-level or nested)."""

    __slots__ = ("opid", "nested", "iterations", "seen", "_frozen")

    def __init__(self, opid: str, nested: bool, seen: set):
        self.opid = opid
        self.nested = nested
        self.iterations = 0
        self.seen = seen
        self._frozen = None  # cached (len, frozenset) of ``seen``

    def frozen_seen(self) -> frozenset:
        cached = self._frozen
        if cached is not None and cached[0] == len(self.seen):
            return cached[1]
        fs = frozenset(self.seen)
        self._frozen = (len(fs), fs)
        return fs

    def snapshot(self) -> tuple:
        return (self.opid, self.nested, self.iterations, self.frozen_seen())

    @classmethod
    def from_snapshot(cls, snap: tuple) -> "_Frame":
        frame = cls(snap[0], snap[1], set(snap[3]))
        frame.iterations = snap[2]
        frame._frozen = (len(snap[3]), snap[3])
        return frame


class _Machine:
    """Per-process execution state."""

    __slots__ = (
        "pid",
        "script",
        "idx",
        "gen",
        "pending",
        "obs",
        "frames",
        "crashed",
        "started",
        "op_steps",
        "inv_seq",
        "collect_armed",
        "collect_first",
        "collect_last",
        "window_start",
        "mkey",
    )

    def __init__(self, pid: int, script: tuple):
        self.pid = pid
        self.script = script
        self.idx = 0
        self.gen: Optional[Iterator] = None
        self.pending = None
        self.obs: list = []
        self.frames: list[_Frame] = []
        self.crashed = False
        self.started = False
        self.op_steps = 0
        self.inv_seq = 0
        self.collect_armed = False
        self.collect_first = 0
        self.collect_last = 0
        self.window_start = 0
        self.mkey = None  # cached merge-key component; None when stale

    @property
    def done(self) -> bool:
        return not self.started and self.idx >= len(self.script)

    @property
    def opid(self) -> str:
        return f"{self.pid}:{self.idx}"

    def current_op(self) -> OpSpec:
        return self.script[self.idx]


def _canonical(value: Any) -> Any:
    """Hashable, rebuildable stand-in for a step observation."""
    if isinstance(value, SnapshotView):
        return (SnapshotView, value.states)
    if isinstance(value, ParticipantCollect):
        return (ParticipantCollect, value.pairs)
    return value


def _reify(value: Any) -> Any:
    """Inverse of :func:`_canonical` for feeding a rebuilt generator."""
    if type(value) is tuple and len(value) == 2:
        if value[0] is SnapshotView:
            return SnapshotView(value[1])
        if value[0] is ParticipantCollect:
            return ParticipantCollect(value[1])
    return value


class Execution:
    """A running system; the scheduler drives it one step at a time."""

    def __init__(self, cfg: SimConfig, _from_snapshot: bool = False):
        if not _from_snapshot:
            cfg.validate()
        self.cfg = cfg
        self.algo = _algorithm(cfg.family, cfg.rules)
        self.types = resolve_object_types(cfg.memory)
        self.scan_bound = self.algo.iteration_bound(cfg.n)
        self.machines = {pid: _Machine(pid, cfg.scripts[pid]) for pid in cfg.pids}
        self.seq = 0
        self.update_inflight = 0
        self.violations: list[Violation] = []
        self.stats = Stats()
        self.events: list[Event] = []
        self.marks: list[Mark] = []
        self.results: dict[int, list] = {}  # observational; not restored/merged
        self._replaying = False
        self._replay_depth = 0
        if not _from_snapshot:
            self.progress: list = self.algo.progress_slots(cfg.n, cfg.capacity)
            self.help: list = self.algo.help_slots(cfg.n, cfg.capacity)
            self.mem: list = [t.initial for t in self.types]
            for pid in cfg.initial_joined:
                self.progress[pid - 1] = 0

    # -- scheduling interface -------------------------------------------------

    def runnable(self) -> list[int]:
        """Pids that may perform a step now, in pid order."""
        out = []
        for pid in self.cfg.pids:
            m = self.machines[pid]
            if m.crashed or m.done:
                continue
            if not m.started:
                nxt = m.current_op()
                if (
                    nxt.kind == "update"
                    and self.algo.solo_updates
                    and self.update_inflight > 0
                ):
                    continue  # external solo-updater guarantee
            if self.algo.has_join and self.progress[pid - 1] == UNJOINED:
                # registration is dense: slot pid may join only after 1..pid-1
                if any(self.progress[j - 1] == UNJOINED for j in range(1, pid)):
                    continue
            out.append(pid)
        return out

    def peek(self, pid: int):
        """The step request process ``pid`` would perform next.

        Starting a process's next operation is part of peeking: the operation
        is invoked (and its invocation recorded) so its first request becomes
        visible.  Use only from hand-driven schedules, never mid-exploration.
        """
        m = self.machines[pid]
        if m.crashed or m.done:
            raise ScenarioError(f"process {pid} has no next step (crashed or finished)")
        self._ensure_live(m)
        return m.pending

    def crashable(self) -> list[int]:
        """Pids that may crash now (mid-script, and registered if joining)."""
        out = []
        for pid in self.cfg.pids:
            m = self.machines[pid]
            if m.crashed or m.done:
                continue
            if self.algo.has_join and self.progress[pid - 1] == UNJOINED:
                continue  # a crash before registration would block later joiners
            out.append(pid)
        return out

    @property
    def done(self) -> bool:
        return not self.runnable()

    @property
    def completed(self) -> bool:
        return all(m.done for m in self.machines.values())

    def perform(self, pid: int) -> None:
        """Run one step of process ``pid`` (starting its next op if needed)."""
        m = self.machines[pid]
        if m.crashed or m.done:
            raise ScenarioError(f"process {pid} cannot run (crashed or finished)")
        m.mkey = None
        self._ensure_live(m)
        self._perform_step(m)

    def crash(self, pid: int) -> None:
        m = self.machines[pid]
        if m.crashed or m.done:
            raise ScenarioError(f"process {pid} cannot crash (crashed or finished)")
        m.mkey = None
        m.crashed = True
        m.gen = None
        m.pending = None
        m.frames = []

    # -- operation lifecycle --------------------------------------------------

    def _ensure_live(self, m: _Machine) -> None:
        if m.pending is not None:
            return
        if m.gen is not None:
            return
        if not m.started:
            self._start_op(m)
        else:
            self._rebuild(m)

    def _make_gen(self, m: _Machine) -> Iterator:
        op = m.current_op()
        ctx = AlgoContext(
            pid=m.pid,
            n=self.cfg.n,
            m=len(self.cfg.memory),
            rules=self.cfg.rules,
            order=self.cfg.order,
            op_ordinal=m.idx,
        )
        if op.kind == "update":
            return self.algo.make_update(ctx, op.entry, op.name, op.args)
        if op.kind == "scan":
            return self.algo.make_scan(ctx)
        return self.algo.make_join(ctx)

    def _start_op(self, m: _Machine) -> None:
        op = m.current_op()
        m.mkey = None
        m.started = True
        m.op_steps = 0
        m.obs = []
        m.gen = self._make_gen(m)
        if op.kind == "update":
            self.update_inflight += 1
        if self.cfg.record:
            self.seq += 1
            data = {"opid": m.opid, "op": op.kind}
            if op.kind == "update":
                data.update(entry=op.entry, name=op.name, args=list(op.args))
            self.events.append(Event(self.seq, "inv", m.pid, data))
        m.inv_seq = self.seq
        self._advance(m, None)

    def _rebuild(self, m: _Machine) -> None:
        """Recreate a machine's generator after restore by replaying its own
        past observations; frames are restored separately from the snapshot."""
        m.gen = self._make_gen(m)
        self._replaying = True
        self._replay_depth = 0
        try:
            item = next(m.gen)
            for value in m.obs:
                while isinstance(item, Annotation):
                    item = m.gen.send(self._absorb_replay(item))
                item = m.gen.send(_reify(value))
            while isinstance(item, Annotation):
                item = m.gen.send(self._absorb_replay(item))
            m.pending = item
        except StopIteration as exc:  # pragma: no cover - would be a defect
            raise HarnessDefect(
                f"rebuilt generator for {m.opid} finished during replay"
            ) from exc
        finally:
            self._replaying = False
        if self._replay_depth != len(m.frames):
            raise HarnessDefect(
                f"rebuild of {m.opid} opened {self._replay_depth} scan frames "
                f"but the snapshot holds {len(m.frames)}"
            )

    def _absorb_replay(self, a: Annotation) -> Any:
        """Process an annotation structurally during generator rebuild."""
        if isinstance(a, ScanBegin):
            self._replay_depth += 1
        elif isinstance(a, ScanEnd):
            self._replay_depth -= 1
        elif isinstance(a, CollectEnd):
            return SnapshotView(a.states)
        return None

    def _advance(self, m: _Machine, value: Any) -> None:
        """Feed ``value`` into the generator; stop at the next step request."""
        try:
            item = m.gen.send(value)
            while isinstance(item, Annotation):
                item = m.gen.send(self._annotate(m, item))
            m.pending = item
        except StopIteration as exc:
            self._complete_op(m, exc.value)

    def _complete_op(self, m: _Machine, result: Any) -> None:
        op = m.current_op()
        if self.cfg.record:
            self.seq += 1
            data: dict = {"opid": m.opid, "op": op.kind}
            if op.kind == "scan":
                data["view"] = result.states if result is not None else None
            elif op.kind == "update":
                data["result"] = result
            self.events.append(Event(self.seq, "resp", m.pid, data))
        if op.kind == "update":
            self.update_inflight -= 1
            self.stats.updates_completed += 1
            payload: Any = result
        elif op.kind == "scan":
            self.stats.scans_completed += 1
            self.stats.max_scan_steps = max(self.stats.max_scan_steps, m.op_steps)
            payload = result.states if result is not None else None
        else:
            payload = OK
        self.results.setdefault(m.pid, []).append((op.kind, payload))
        m.started = False
        m.gen = None
        m.pending = None
        m.obs = []
        m.idx += 1

    # -- annotations ----------------------------------------------------------

    def _annotate(self, m: _Machine, a: Annotation) -> Any:
        if isinstance(a, ScanBegin):
            m.frames.append(_Frame(m.opid, a.nested, {tuple(self.mem)}))
            return None
        if isinstance(a, IterBegin):
            frame = m.frames[-1]
            frame.iterations = a.number
            if a.number > self.cfg.iteration_cap:
                raise ExplorationOverflow(
                    f"scan {frame.opid} of process {m.pid} exceeded the iteration "
                    f"cap of {self.cfg.iteration_cap}"
                )
            m.window_start = self.seq + 1
            return None
        if isinstance(a, CollectBegin):
            m.collect_armed = True
            m.collect_first = 0
            return None
        if isinstance(a, CollectEnd):
            meta = None
            if self.cfg.stamp_meta:
                meta = ViewMeta(m.pid, m.collect_first, m.collect_last)
            m.collect_armed = False
            return SnapshotView(a.states, meta)
        if isinstance(a, WindowMark):
            if self.cfg.record:
                self.marks.append(
                    Mark(
                        self.seq,
                        m.pid,
                        {
                            "mark": "window",
                            "opid": m.frames[-1].opid,
                            "start": m.window_start,
                            "end": self.seq,
                            "before": _canonical(a.before),
                            "after": _canonical(a.after),
                        },
                    )
                )
            return None
        if isinstance(a, ScanEnd):
            return self._finish_scan(m, a)
        raise HarnessDefect(f"unknown annotation {a!r}")

    def _finish_scan(self, m: _Machine, a: ScanEnd) -> None:
        frame = m.frames.pop()
        if a.view is None:
            self.violations.append(
                Violation(
                    "empty-view",
                    m.pid,
                    frame.opid,
                    self.seq,
                    {"path": a.path, "nested": frame.nested},
                )
            )
        elif a.view.states not in frame.seen:
            self.violations.append(
                Violation(
                    "stale-view",
                    m.pid,
                    frame.opid,
                    self.seq,
                    {
                        "path": a.path,
                        "nested": frame.nested,
                        "view": a.view.states,
                        "states_seen": len(frame.seen),
                    },
                )
            )
        if frame.nested:
            self.stats.max_nested_iterations = max(
                self.stats.max_nested_iterations, a.iterations
            )
        else:
            self.stats.max_scan_iterations = max(
                self.stats.max_scan_iterations, a.iterations
            )
        key = ("nested:" if frame.nested else "") + a.path
        self.stats.scan_paths[key] = self.stats.scan_paths.get(key, 0) + 1
        bound = self.scan_bound
        if self.cfg.rules.wait_free and bound is not None and a.iterations > bound:
            self.stats.bound_exceeded.append(
                {
                    "opid": frame.opid,
                    "pid": m.pid,
                    "nested": frame.nested,
                    "iterations": a.iterations,
                    "bound": bound,
                }
            )
        if self.cfg.record:
            self.marks.append(
                Mark(
                    self.seq,
                    m.pid,
                    {
                        "mark": "scan-end",
                        "opid": frame.opid,
                        "path": a.path,
                        "nested": frame.nested,
                        "iterations": a.iterations,
                    },
                )
            )
        return None

    # -- steps ----------------------------------------------------------------

    def _perform_step(self, m: _Machine) -> None:
        req = m.pending
        m.pending = None
        self.seq += 1
        data: Optional[dict] = {"opid": m.opid} if self.cfg.record else None
        if isinstance(req, ReadCell):
            value = self._read_cell(req.family, req.index)
            if data is not None:
                data.update(op="read", cell=[req.family, req.index], value=value)
        elif isinstance(req, WriteCell):
            self._write_cell(req.family, req.index, req.value)
            value = None
            if data is not None:
                data.update(op="write", cell=[req.family, req.index], value=req.value)
        elif isinstance(req, ReadEntry):
            value = self.mem[req.index - 1]
            if data is not None:
                data.update(op="read-entry", entry=req.index, state=value)
        elif isinstance(req, ApplyEntry):
            value = self._apply_entry(m, req, data)
        else:  # pragma: no cover - would be a defect
            raise HarnessDefect(f"unknown step request {req!r}")
        if data is not None:
            self.events.append(Event(self.seq, "step", m.pid, data))
        m.op_steps += 1
        if m.collect_armed and isinstance(req, ReadEntry):
            if m.collect_first == 0:
                m.collect_first = self.seq
            m.collect_last = self.seq
        m.obs.append(_canonical(value))
        self._advance(m, value)

    def _read_cell(self, family: str, index: int) -> Any:
        cells = self.progress if family == PROGRESS else self.help
        if index > len(cells):
            return UNJOINED if family == PROGRESS else None
        return cells[index - 1]

    def _write_cell(self, family: str, index: int, value: Any) -> None:
        cells = self.progress if family == PROGRESS else self.help
        while index > len(cells):  # registry growth; not charged as extra steps
            cells.append(UNJOINED if family == PROGRESS else None)
        cells[index - 1] = value

    def _apply_entry(self, m: _Machine, req: ApplyEntry, data: Optional[dict]) -> Any:
        old = self.mem[req.index - 1]
        new, result = self.types[req.index - 1].apply(old, req.op, req.args)
        self.mem[req.index - 1] = new
        state = tuple(self.mem)
        for machine in self.machines.values():
            for frame in machine.frames:
                before = len(frame.seen)
                frame.seen.add(state)
                if len(frame.seen) != before:
                    machine.mkey = None
        if data is not None:
            data.update(
                op="apply",
                entry=req.index,
                name=req.op,
                args=list(req.args),
                old=old,
                new=new,
                result=result,
            )
        return result

    # -- fork / restore / merge ----------------------------------------------

    def snapshot(self) -> tuple:
        """Immutable snapshot sufficient to rebuild this execution."""
        if self.cfg.record:
            raise HarnessDefect("snapshot/fork is only supported with recording off")
        machines = tuple(
            (
                m.idx,
                m.started,
                m.crashed,
                m.op_steps,
                tuple(m.obs),
                tuple(f.snapshot() for f in m.frames),
            )
            for m in (self.machines[pid] for pid in self.cfg.pids)
        )
        return (
            tuple(self.progress),
            tuple(self.help),
            tuple(self.mem),
            self.seq,
            self.update_inflight,
            machines,
            tuple(self.violations),
        )

    @classmethod
    def restore(cls, cfg: SimConfig, snap: tuple) -> "Execution":
        ex = cls(cfg, _from_snapshot=True)
        ex.progress = list(snap[0])
        ex.help = list(snap[1])
        ex.mem = list(snap[2])
        ex.seq = snap[3]
        ex.update_inflight = snap[4]
        for (pid, mstate) in zip(cfg.pids, snap[5]):
            m = ex.machines[pid]
            m.idx, m.started, m.crashed, m.op_steps = mstate[0], mstate[1], mstate[2], mstate[3]
            m.obs = list(mstate[4])
            m.frames = [_Frame.from_snapshot(f) for f in mstate[5]]
        ex.violations = list(snap[6])
        return ex

    def fork(self) -> "Execution":
        return Execution.restore(self.cfg, self.snapshot())

    def merge_key(self) -> tuple:
        """Equivalence key: executions with equal keys have identical futures
        (same reachable behaviors and same residual verdicts)."""
        machines = []
        for pid in self.cfg.pids:
            m = self.machines[pid]
            mk = m.mkey
            if mk is None:
                mk = (
                    m.idx,
                    m.started,
                    m.crashed,
                    tuple(m.obs),
                    tuple(f.frozen_seen() for f in m.frames),
                )
                m.mkey = mk
            machines.append(mk)
        return (
            tuple(self.progress),
            tuple(self.help),
            tuple(self.mem),
            tuple(machines),
        )

    # -- recorded output ------------------------------------------------------

    def history(self) -> History:
        if not self.cfg.record:
            raise HarnessDefect("history requested but recording was off")
        return History(memory=self.cfg.memory, events=list(self.events), marks=list(self.marks))


# -- schedule running ---------------------------------------------------------


def crash_token(pid: int) -> str:
    return f"crash:{pid}"


def parse_token(token) -> tuple[str, int]:
    """Normalize a schedule token to ("step"|"crash", pid)."""
    if isinstance(token, int):
        return ("step", token)
    if isinstance(token, str) and token.startswith("crash:"):
        return ("crash", int(token.split(":", 1)[1]))
    if isinstance(token, str) and token.isdigit():
        return ("step", int(token))
    raise ScenarioError(f"bad schedule token {token!r}")


def run_schedule(cfg: SimConfig, tokens, *, require_done: bool = False) -> Execution:
    """Drive a fresh execution through an explicit schedule."""
    ex = Execution(cfg)
    for i, token in enumerate(tokens):
        action, pid = parse_token(token)
        if action == "crash":
            if pid not in ex.crashable():
                raise ScenarioError(
                    f"schedule token {i}: process {pid} cannot crash here"
                )
            ex.crash(pid)
        else:
            if pid not in ex.runnable():
                raise ScenarioError(f"schedule token {i}: process {pid} is not runnable")
            ex.perform(pid)
    if require_done and not ex.done:
        raise ScenarioError("schedule ended before the execution was finished")
    return ex
