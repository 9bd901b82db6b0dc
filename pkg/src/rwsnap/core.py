"""Core model: registers, readable objects, views, collects, and rule flags.

The snapshot algorithms in this package are written against a tiny shared-memory
vocabulary: single-writer atomic register cells (progress counters and help
slots) and an array of readable objects (the snapshotted memory).  Algorithm
code is expressed as Python generators that *yield* one request per shared
access and receive the access result via ``send``.  This keeps a single
implementation usable both under the deterministic step-level simulator and
under real threads.

Every shared access is one of four step requests:

* ``ReadCell`` / ``WriteCell`` -- atomic register access, addressed by a cell
  family (``"progress"`` or ``"help"``) and a 1-based process index;
* ``ReadEntry`` -- read the state of one memory entry;
* ``ApplyEntry`` -- atomically apply a named operation to one memory entry
  (the only kind of step that mutates an entry).

Anything else a generator yields is an :class:`Annotation`: zero-cost markers
(scan begin/end, loop-iteration boundaries, collect boundaries) that the
driving environment consumes without spending a scheduling step.  Annotations
carry enough structure for the harness to track scan frames, loop-iteration
counts and view provenance without the algorithms knowing about the harness.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator, Mapping, NamedTuple, Optional, Sequence

# ---------------------------------------------------------------------------
# Constants and errors
# ---------------------------------------------------------------------------

#: Result returned by updates when ``Ruleset.return_result`` is off.
OK = "OK"

#: Progress-counter value marking a slot whose process has not joined yet
#: (used only by the unbounded-concurrency algorithm).
UNJOINED = -1

#: Register-cell families.
PROGRESS = "progress"
HELP = "help"


class ScenarioError(ValueError):
    """A scenario, schedule, or configuration value is malformed."""


class HarnessDefect(AssertionError):
    """Internal cross-check failed: the harness itself is inconsistent.

    Raised e.g. when the two independent history checkers disagree; never an
    algorithm verdict.
    """


class ExplorationOverflow(RuntimeError):
    """A search or checker exceeded its configured budget."""


# ---------------------------------------------------------------------------
# Step requests (shared-memory accesses; every yield of one of these is one
# atomic step of the issuing process)
# ---------------------------------------------------------------------------


class ReadCell(NamedTuple):
    family: str
    index: int


class WriteCell(NamedTuple):
    family: str
    index: int
    value: Any


class ReadEntry(NamedTuple):
    index: int  # 1-based memory entry


class ApplyEntry(NamedTuple):
    index: int
    op: str
    args: tuple


STEP_TYPES = (ReadCell, WriteCell, ReadEntry, ApplyEntry)


# ---------------------------------------------------------------------------
# Annotations (free markers consumed by the environment, never a step)
# ---------------------------------------------------------------------------


class Annotation:
    """Base class for zero-cost generator markers."""

    __slots__ = ()


@dataclass(frozen=True)
class ScanBegin(Annotation):
    nested: bool = False


@dataclass(frozen=True)
class ScanEnd(Annotation):
    """Marks a scan returning ``view`` via ``path`` after ``iterations`` loop bodies.

    ``path`` is one of ``"direct"`` (the double collect was quiet),
    ``"settled"`` (equal re-collects plus an unchanged-counters check), or
    ``"borrowed"`` / ``"borrowed-new"`` (a helper's published view was
    returned; ``-new`` marks the unbounded algorithm's newly-joined-helper
    exit).
    """

    view: Any
    path: str
    iterations: int


@dataclass(frozen=True)
class IterBegin(Annotation):
    """Start of one scan loop body (the part that performs collects)."""

    number: int


@dataclass(frozen=True)
class WindowMark(Annotation):
    """End of the progress-read window of one scan loop body.

    ``before``/``after`` are the progress values (or collects) read at the
    window boundaries.  The environment attaches step positions so tests can
    audit how many mutations fell strictly inside the window.
    """

    before: Any
    after: Any


@dataclass(frozen=True)
class CollectBegin(Annotation):
    target: str  # "mem" or "progress"


@dataclass(frozen=True)
class CollectEnd(Annotation):
    """End of a memory collect; the environment answers with the view object.

    The environment may wrap the raw state tuple in a :class:`SnapshotView`
    carrying provenance metadata; a bare environment just echoes a plain view.
    """

    states: tuple


# ---------------------------------------------------------------------------
# Readable objects
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ObjectType:
    """A readable, linearizable object given by pure state transformers.

    ``ops`` maps an operation name to ``f(state, args) -> (new_state, result)``.
    States must be immutable and hashable.  ``read`` is implicit: it returns
    the state and never mutates.
    """

    name: str
    initial: Any
    ops: Mapping[str, Callable[[Any, tuple], tuple[Any, Any]]]

    def apply(self, state: Any, op: str, args: tuple) -> tuple[Any, Any]:
        try:
            fn = self.ops[op]
        except KeyError:
            raise ScenarioError(
                f"object type {self.name!r} has no operation {op!r}"
            ) from None
        return fn(state, tuple(args))

    def validate(self, op: str, args: tuple) -> None:
        """Reject unknown operations or ill-typed arguments up front."""
        self.apply(self.initial, op, args)


def _counter_add(state: int, args: tuple) -> tuple[int, int]:
    if len(args) != 1 or not isinstance(args[0], int):
        raise ScenarioError(f"counter.add takes one integer, got {args!r}")
    new = state + args[0]
    return new, new


def _register_write(state: Any, args: tuple) -> tuple[Any, Any]:
    if len(args) != 1:
        raise ScenarioError(f"register.write takes one value, got {args!r}")
    return args[0], state


def _maxreg_maxwrite(state: int, args: tuple) -> tuple[int, int]:
    if len(args) != 1 or not isinstance(args[0], int):
        raise ScenarioError(f"maxreg.maxwrite takes one integer, got {args!r}")
    new = max(state, args[0])
    return new, new


def _log_append(state: tuple, args: tuple) -> tuple[tuple, int]:
    if len(args) != 1:
        raise ScenarioError(f"log.append takes one value, got {args!r}")
    new = state + (args[0],)
    return new, len(new)


#: Bundled object types: an add counter (returns the new total), a
#: multi-valued write register (returns the overwritten value), a max-register
#: (returns the resulting maximum), and an append-only log (returns the new
#: length).
OBJECT_TYPES: dict[str, ObjectType] = {
    "counter": ObjectType("counter", 0, {"add": _counter_add}),
    "register": ObjectType("register", 0, {"write": _register_write}),
    "maxreg": ObjectType("maxreg", 0, {"maxwrite": _maxreg_maxwrite}),
    "log": ObjectType("log", (), {"append": _log_append}),
}


def resolve_object_types(names: Sequence[str]) -> tuple[ObjectType, ...]:
    try:
        return tuple(OBJECT_TYPES[name] for name in names)
    except KeyError as exc:
        raise ScenarioError(f"unknown object type {exc.args[0]!r}") from None


# ---------------------------------------------------------------------------
# Snapshot views
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ViewMeta:
    """Provenance of a view: who collected it and over which step positions."""

    producer: int
    first_read: int
    last_read: int


class SnapshotView:
    """An immutable array of entry states, as returned by a scan.

    Equality and hashing consider only the states; ``meta`` is harness-side
    provenance (producing process and the step positions of the collect that
    built it) and never influences algorithm behaviour.
    """

    __slots__ = ("states", "meta")

    def __init__(self, states: Sequence[Any], meta: Optional[ViewMeta] = None):
        object.__setattr__(self, "states", tuple(states))
        object.__setattr__(self, "meta", meta)

    def __setattr__(self, name: str, value: Any) -> None:  # pragma: no cover
        raise AttributeError("SnapshotView is immutable")

    def __getitem__(self, entry: int) -> Any:
        """1-based entry access."""
        return self.states[entry - 1]

    def __len__(self) -> int:
        return len(self.states)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, SnapshotView):
            return self.states == other.states
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.states)

    def __repr__(self) -> str:
        return f"SnapshotView({list(self.states)!r})"


# ---------------------------------------------------------------------------
# Participant collects (unbounded algorithm)
# ---------------------------------------------------------------------------


class ParticipantCollect:
    """An immutable set of ``(process id, progress value)`` pairs.

    Produced by collecting the registration array: only joined slots appear.
    """

    __slots__ = ("pairs", "_map")

    def __init__(self, pairs: Sequence[tuple[int, int]]):
        ordered = tuple(sorted(pairs))
        object.__setattr__(self, "pairs", ordered)
        object.__setattr__(self, "_map", dict(ordered))
        if len(self._map) != len(ordered):
            raise ValueError(f"duplicate process id in collect: {pairs!r}")

    def __setattr__(self, name: str, value: Any) -> None:  # pragma: no cover
        raise AttributeError("ParticipantCollect is immutable")

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.pairs)

    def __getitem__(self, pid: int) -> int:
        return self._map[pid]

    def get(self, pid: int, default: Optional[int] = None) -> Optional[int]:
        return self._map.get(pid, default)

    def __contains__(self, pid: int) -> bool:
        return pid in self._map

    def __len__(self) -> int:
        return len(self.pairs)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, ParticipantCollect):
            return self.pairs == other.pairs
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.pairs)

    def __repr__(self) -> str:
        return f"ParticipantCollect({list(self.pairs)!r})"


EMPTY_COLLECT = ParticipantCollect(())


# ---------------------------------------------------------------------------
# Collect ordering
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CollectOrder:
    """Order in which collects read entries/counters.

    ``spec`` is ``"asc"``, ``"desc"`` or ``"random:<seed>"``.  The random
    policy derives a permutation per (process, collect ordinal), so a given
    process's k-th collect always uses the same order regardless of
    scheduling -- a requirement for deterministic replay.
    """

    spec: str = "asc"

    def __post_init__(self) -> None:
        if self.spec not in ("asc", "desc"):
            if not self.spec.startswith("random:"):
                raise ScenarioError(
                    f"collect order must be 'asc', 'desc' or 'random:<seed>', got {self.spec!r}"
                )
            try:
                int(self.spec.split(":", 1)[1])
            except ValueError:
                raise ScenarioError(
                    f"collect order random seed must be an integer: {self.spec!r}"
                ) from None

    @property
    def seed(self) -> Optional[int]:
        if self.spec.startswith("random:"):
            return int(self.spec.split(":", 1)[1])
        return None

    def order(self, key: tuple, size: int) -> tuple[int, ...]:
        """1-based read order for a collect over ``size`` slots.

        ``key`` identifies the collect (process id, operation ordinal, collect
        ordinal within the operation) so the permutation is a pure function of
        who is collecting, independent of scheduling.
        """
        base = list(range(1, size + 1))
        if self.spec == "asc":
            return tuple(base)
        if self.spec == "desc":
            return tuple(reversed(base))
        rng = random.Random(repr((self.seed,) + key))
        rng.shuffle(base)
        return tuple(base)


@dataclass
class AlgoContext:
    """Per-operation context handed to the algorithm generators.

    Carries the issuing process id, the array sizes, the active rule flags and
    the collect-order policy.  ``op_ordinal`` is the operation's position in
    the process's script; together with a per-operation collect counter it
    keys the seeded-random collect order, which must not depend on scheduling.
    """

    pid: int
    n: int
    m: int
    rules: Ruleset
    order: CollectOrder = field(default_factory=CollectOrder)
    op_ordinal: int = 0
    _collects: int = 0

    def next_mem_order(self) -> tuple[int, ...]:
        self._collects += 1
        return self.order.order((self.pid, self.op_ordinal, self._collects), self.m)

    def next_progress_order(self) -> tuple[int, ...]:
        self._collects += 1
        return self.order.order((self.pid, self.op_ordinal, self._collects), self.n)


# ---------------------------------------------------------------------------
# Rule flags: variants and mutations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Ruleset:
    """Behaviour switches distinguishing algorithm variants and mutants.

    * ``wait_free`` -- helping machinery on: updates publish a view before
      mutating, scans track observed progress and borrow a published view
      once a peer has moved ``help_threshold`` times.
    * ``publish_help`` -- updates actually write their pre-mutation view to
      their help slot (turning this off while ``wait_free`` stays on is the
      ``no-help-publish`` mutant).
    * ``help_threshold`` -- observed progress increments before a scan borrows.
    * ``verify_settled`` -- after equal re-collects, also require a third
      progress collect equal to the second before returning (turning this off
      is the ``drop-third-collect`` mutant).
    * ``retry_rescue`` -- perform the equal-re-collect block at all (off in
      the blocking variant, which only returns from a quiet double collect).
    * ``guard_new_joiners`` -- unbounded algorithm only: require newly joined
      processes seen in the second progress collect to still be within their
      first update (off is the ``no-joiner-guard`` mutant).
    * ``return_result`` -- updates return the applied operation's result;
      off returns the plain ``OK`` token.
    """

    wait_free: bool = True
    publish_help: bool = True
    help_threshold: int = 4
    verify_settled: bool = True
    retry_rescue: bool = True
    guard_new_joiners: bool = True
    return_result: bool = True


#: Named variants accepted by scenarios and the command line.
VARIANTS: dict[str, Ruleset] = {
    "solo-lf": Ruleset(wait_free=False, publish_help=False),
    "solo-wf": Ruleset(),
    "conc-lf": Ruleset(wait_free=False, publish_help=False),
    "conc-wf": Ruleset(),
    "conc-blocking": Ruleset(wait_free=False, publish_help=False, retry_rescue=False),
    "unbounded": Ruleset(),
}

#: Which algorithm family each variant belongs to.
VARIANT_FAMILY: dict[str, str] = {
    "solo-lf": "solo",
    "solo-wf": "solo",
    "conc-lf": "concurrent",
    "conc-wf": "concurrent",
    "conc-blocking": "concurrent",
    "unbounded": "unbounded",
}

#: Bundled mutants: named single-rule changes that each break a distinct
#: ingredient of the algorithms.  Values are (rule field, mutated value,
#: families the mutant applies to).
MUTANTS: dict[str, tuple[str, Any, tuple[str, ...]]] = {
    "no-help-publish": ("publish_help", False, ("solo", "concurrent", "unbounded")),
    "drop-third-collect": ("verify_settled", False, ("concurrent", "unbounded")),
    "weak-help-threshold": ("help_threshold", 2, ("solo", "concurrent", "unbounded")),
    "no-joiner-guard": ("guard_new_joiners", False, ("unbounded",)),
}


def apply_mutant(rules: Ruleset, mutant: Optional[str], family: str) -> Ruleset:
    if mutant is None:
        return rules
    try:
        fld, value, families = MUTANTS[mutant]
    except KeyError:
        raise ScenarioError(
            f"unknown mutant {mutant!r}; available: {', '.join(sorted(MUTANTS))}"
        ) from None
    if family not in families:
        raise ScenarioError(f"mutant {mutant!r} does not apply to the {family} algorithm")
    from dataclasses import replace

    return replace(rules, **{fld: value})


# ---------------------------------------------------------------------------
# Collect generators (shared by all algorithms)
# ---------------------------------------------------------------------------


def collect_entries(order: Sequence[int]) -> Iterator[Any]:
    """Read every memory entry once, in ``order``; return the state tuple.

    The result tuple is in entry order regardless of read order.  The
    surrounding environment answers the trailing :class:`CollectEnd` with the
    view object to use (it may attach provenance).
    """
    out: list[Any] = [None] * len(order)
    yield CollectBegin("mem")
    for k in order:
        out[k - 1] = yield ReadEntry(k)
    view = yield CollectEnd(tuple(out))
    return view


def collect_counters(order: Sequence[int]) -> Iterator[Any]:
    """Read the fixed-size progress array once, in ``order``; return a tuple."""
    out: list[int] = [0] * len(order)
    for j in order:
        out[j - 1] = yield ReadCell(PROGRESS, j)
    return tuple(out)


def collect_registry() -> Iterator[Any]:
    """Collect the dense registration array of the unbounded algorithm.

    Slots are probed from 1 upward; the first unjoined slot terminates the
    collect.  Because ids are handed out densely in join order, joined slots
    always form a prefix, so this reads exactly the currently (or recently)
    joined participants.
    """
    pairs: list[tuple[int, int]] = []
    j = 1
    while True:
        value = yield ReadCell(PROGRESS, j)
        if value == UNJOINED:
            return ParticipantCollect(pairs)
        pairs.append((j, value))
        j += 1


# ---------------------------------------------------------------------------
# Pure formulas used by the scan loops
# ---------------------------------------------------------------------------


def is_steady(before: Sequence[int], after: Sequence[int]) -> bool:
    """Fixed-size quiet test: no counter advanced by more than one."""
    return all(b - a <= 1 for a, b in zip(before, after))


def possible_writers(before: Sequence[int], after: Sequence[int]) -> int:
    """Upper bound on processes that may have mutated between two collects.

    A process certainly did not mutate if its progress counter is unchanged
    and even (no update in flight at either read); everyone else counts.
    """
    still = sum(1 for a, b in zip(before, after) if a == b and a % 2 == 0)
    return len(before) - still


def move_deltas(before: Sequence[int], after: Sequence[int]) -> tuple[int, ...]:
    """Per-process progress increments observed across one loop body."""
    return tuple(b - a for a, b in zip(before, after))


def is_steady_unbounded(
    before: ParticipantCollect,
    after: ParticipantCollect,
    *,
    guard_new_joiners: bool = True,
) -> bool:
    """Unbounded quiet test.

    Known participants must not have advanced by more than one; newly seen
    participants must still be within their first update (progress <= 2).
    The second clause is the joiner guard (dropped by its mutant).
    """
    for j in before.ids:
        if after[j] - before[j] > 1:
            return False
    if guard_new_joiners:
        for j in after.ids:
            if j not in before and after[j] > 2:
                return False
    return True


def possible_writers_unbounded(
    before: ParticipantCollect,
    after: ParticipantCollect,
    fresh_help: Mapping[int, Any],
) -> int:
    """Unbounded writer bound.

    ``fresh_help`` maps each id in ``after`` but not ``before`` to its help
    slot as read at evaluation time.  Newly seen participants with an empty
    help slot cannot have completed a mutation visible to this scan's collect,
    and unchanged-even known participants did not mutate; the rest count.
    """
    still = sum(
        1 for j in before.ids if before[j] == after[j] and before[j] % 2 == 0
    )
    fresh_quiet = sum(1 for j in after.ids if j not in before and fresh_help[j] is None)
    return len(after) - still - fresh_quiet


def accumulate_moves_unbounded(
    moves: Mapping[int, int],
    before: ParticipantCollect,
    after: ParticipantCollect,
) -> dict[int, int]:
    """Fold one loop body's observed progress into the move tally.

    Known participants contribute their increment; participants seen for the
    first time contribute their entire counter (all of it moved since the
    scan could first have seen them).
    """
    out = dict(moves)
    for j in after.ids:
        if j in before:
            out[j] = out.get(j, 0) + (after[j] - before[j])
        else:
            out[j] = out.get(j, 0) + after[j]
    return out
