"""Correctness checking for recorded histories.

Two independent judges:

* :func:`check_linearizable` -- a Wing/Gong-style search for a legal
  sequential witness of the invocation/response history against the
  sequential snapshot-memory specification.  Completed operations must be
  linearized; pending updates may take effect or not; pending scans are
  ignored.  Memoized on (remaining operations, memory state) with a node
  budget; returns a witness order or a minimal violating prefix.
* :func:`timeline_oracle_check` -- uses the harness's extra knowledge (the
  exact global order of apply steps) to test the stronger property that every
  completed scan returned a memory state that was *current at some instant*
  within the scan's interval, and that every completed update applied exactly
  once inside its interval.

The timeline oracle is strictly stronger: a history can be linearizable while
failing the timeline test (a scan view assembled from per-entry states that
never coexisted can still be ordered legally when updates commute).  So
:func:`cross_validate` flags a harness defect only when the oracle passes a
history that the linearizability checker rejects -- never the other way
around.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from .core import OK, HarnessDefect
from .history import History, OpRecord

DEFAULT_NODE_BUDGET = 2_000_000

LINEARIZABLE = "linearizable"
NOT_LINEARIZABLE = "not-linearizable"
OVERFLOW = "overflow"

PASS = "pass"
VIOLATION = "violation"


@dataclass
class CheckResult:
    verdict: str  # LINEARIZABLE | NOT_LINEARIZABLE | OVERFLOW
    witness: Optional[list[str]] = None  # opids in linearization order
    evidence: Optional[dict] = None  # minimal violating prefix details
    nodes: int = 0

    @property
    def ok(self) -> bool:
        return self.verdict == LINEARIZABLE


@dataclass
class OracleResult:
    verdict: str  # PASS | VIOLATION
    violations: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.verdict == PASS


@dataclass
class CrossReport:
    oracle: OracleResult
    checker: CheckResult
    consistent: bool


# ---------------------------------------------------------------------------
# Sequential specification
# ---------------------------------------------------------------------------


def _apply_sequentially(history: History, state: tuple, rec: OpRecord):
    """Apply one operation to a sequential memory state.

    Returns ``(new_state, legal)``; ``legal`` is False when the operation's
    recorded outcome contradicts the sequential specification at this point.
    """
    if rec.kind == "scan":
        return state, (rec.view == state)
    if rec.kind == "join":
        return state, True
    obj = _types(history)[rec.entry - 1]
    new_entry, result = obj.apply(state[rec.entry - 1], rec.name, rec.args)
    new_state = state[: rec.entry - 1] + (new_entry,) + state[rec.entry :]
    if rec.completed and rec.result not in (None, OK):
        return new_state, result == rec.result
    return new_state, True


def _types(history: History):
    from .core import resolve_object_types

    return resolve_object_types(history.memory)


# ---------------------------------------------------------------------------
# Wing/Gong-style linearizability search
# ---------------------------------------------------------------------------


def _checkable_records(history: History) -> list[OpRecord]:
    records = [r for r in history.op_records().values() if r.kind != "join"]
    records.sort(key=lambda r: r.inv_seq)
    return records


def check_linearizable(
    history: History, *, node_budget: int = DEFAULT_NODE_BUDGET
) -> CheckResult:
    """Decide linearizability of a recorded history.

    Completed scans and updates must appear in the witness; pending updates
    may appear (their effect may or may not have taken hold); pending scans
    never constrain the outcome and are dropped.
    """
    history.validate()
    records = _checkable_records(history)
    candidates = [r for r in records if r.completed or r.kind == "update"]
    required = frozenset(r.opid for r in records if r.completed)
    result = _search(history, candidates, required, node_budget)
    if result.verdict != NOT_LINEARIZABLE:
        return result
    evidence = _minimal_prefix(history, records, node_budget)
    result.evidence = evidence
    return result


def _search(
    history: History,
    candidates: list[OpRecord],
    required: frozenset,
    node_budget: int,
) -> CheckResult:
    import math

    by_id = {r.opid: r for r in candidates}
    inv = {r.opid: r.inv_seq for r in candidates}
    resp = {r.opid: (r.resp_seq if r.completed else math.inf) for r in candidates}
    initial = history.initial_state
    failed: set = set()
    nodes = 0
    witness: list[str] = []

    def admissible(opid: str, remaining: frozenset) -> bool:
        t = inv[opid]
        return all(resp[other] > t for other in remaining if other != opid)

    def dfs(remaining: frozenset, state: tuple) -> bool:
        nonlocal nodes
        if not (required & remaining):
            return True  # every completed operation is linearized
        key = (remaining, state)
        if key in failed:
            return False
        nodes += 1
        if nodes > node_budget:
            raise _Overflow()
        for r in sorted((by_id[o] for o in remaining), key=lambda r: r.inv_seq):
            if not admissible(r.opid, remaining):
                continue
            new_state, legal = _apply_sequentially(history, state, r)
            if legal:
                witness.append(r.opid)
                if dfs(remaining - {r.opid}, new_state):
                    return True
                witness.pop()
            if not r.completed:
                # a pending update may also never take effect: drop it
                if dfs(remaining - {r.opid}, state):
                    return True
        failed.add(key)
        return False

    try:
        ok = dfs(frozenset(by_id), initial)
    except _Overflow:
        return CheckResult(OVERFLOW, nodes=nodes)
    if ok:
        return CheckResult(LINEARIZABLE, witness=list(witness), nodes=nodes)
    return CheckResult(NOT_LINEARIZABLE, nodes=nodes)


class _Overflow(Exception):
    pass


def _minimal_prefix(
    history: History, records: list[OpRecord], node_budget: int
) -> Optional[dict]:
    """Shortest prefix (by completed responses) that is already unlinearizable."""
    responses = sorted(
        (r.resp_seq for r in records if r.completed), key=lambda s: s
    )
    for cut_index, cut_seq in enumerate(responses, start=1):
        trimmed = _truncate(records, cut_seq)
        candidates = [r for r in trimmed if r.completed or r.kind == "update"]
        required = frozenset(r.opid for r in trimmed if r.completed)
        res = _search(history, candidates, required, node_budget)
        if res.verdict == NOT_LINEARIZABLE:
            culprit = next(r.opid for r in trimmed if r.resp_seq == cut_seq)
            return {
                "responses": cut_index,
                "last_response_opid": culprit,
                "ops": sorted(r.opid for r in trimmed),
            }
    return None


def _truncate(records: list[OpRecord], cut_seq: int) -> list[OpRecord]:
    """The history restricted to events at or before ``cut_seq``."""
    out = []
    for r in records:
        if r.inv_seq > cut_seq:
            continue
        if r.completed and r.resp_seq > cut_seq:
            out.append(
                OpRecord(
                    opid=r.opid,
                    pid=r.pid,
                    kind=r.kind,
                    inv_seq=r.inv_seq,
                    resp_seq=None,
                    entry=r.entry,
                    name=r.name,
                    args=r.args,
                )
            )
        else:
            out.append(r)
    return out


# ---------------------------------------------------------------------------
# Brute-force reference (small histories only)
# ---------------------------------------------------------------------------


def brute_force_linearizable(history: History, *, max_ops: int = 8) -> bool:
    """Try every permutation and every pending-update subset.  Reference only."""
    history.validate()
    records = _checkable_records(history)
    completed = [r for r in records if r.completed]
    pending_updates = [r for r in records if not r.completed and r.kind == "update"]
    if len(completed) + len(pending_updates) > max_ops:
        raise ValueError(f"brute force limited to {max_ops} operations")
    initial = history.initial_state
    for r_bits in itertools.product((False, True), repeat=len(pending_updates)):
        chosen = completed + [r for r, keep in zip(pending_updates, r_bits) if keep]
        for perm in itertools.permutations(chosen):
            ok = True
            for a, b in itertools.combinations(range(len(perm)), 2):
                # perm[a] before perm[b]: forbidden if b responded before a invoked
                if perm[b].resp_seq is not None and perm[b].resp_seq < perm[a].inv_seq:
                    ok = False
                    break
            if not ok:
                continue
            state = initial
            for r in perm:
                state, legal = _apply_sequentially(history, state, r)
                if not legal:
                    ok = False
                    break
            if ok:
                return True
    return False


# ---------------------------------------------------------------------------
# Timeline oracle
# ---------------------------------------------------------------------------


def timeline_oracle_check(history: History) -> OracleResult:
    """Check scans against instantaneous states and updates against their
    intervals, using the recorded global order of apply steps."""
    history.validate()
    violations: list[dict] = []
    for rec in _checkable_records(history):
        if rec.kind == "scan" and rec.completed:
            window = history.states_in_window(rec.inv_seq, rec.resp_seq)
            if rec.view is None:
                violations.append(
                    {"kind": "empty-view", "opid": rec.opid, "pid": rec.pid}
                )
            elif rec.view not in window:
                violations.append(
                    {
                        "kind": "stale-view",
                        "opid": rec.opid,
                        "pid": rec.pid,
                        "view": rec.view,
                        "window_states": len(window),
                    }
                )
        elif rec.kind == "update":
            applies = rec.apply_seqs
            bad_count = len(applies) != 1 if rec.completed else len(applies) > 1
            if bad_count:
                violations.append(
                    {
                        "kind": "apply-count",
                        "opid": rec.opid,
                        "pid": rec.pid,
                        "applies": len(applies),
                    }
                )
            hi = rec.resp_seq if rec.completed else float("inf")
            for seq in applies:
                if not rec.inv_seq < seq < hi:
                    violations.append(
                        {
                            "kind": "apply-outside-interval",
                            "opid": rec.opid,
                            "pid": rec.pid,
                            "seq": seq,
                        }
                    )
    verdict = PASS if not violations else VIOLATION
    return OracleResult(verdict, violations)


# ---------------------------------------------------------------------------
# Cross-validation
# ---------------------------------------------------------------------------


def cross_validate(
    history: History, *, node_budget: int = DEFAULT_NODE_BUDGET
) -> CrossReport:
    """Run both judges and test their verdicts for consistency.

    The only inconsistent combination is oracle *pass* with checker
    *not linearizable*: a history whose every scan saw an instantaneous state
    is always linearizable, so that pairing indicates a defect in the harness
    (or in one of the judges).  The reverse pairing -- oracle violation,
    checker satisfied -- is expected for some histories and is consistent.
    """
    oracle = timeline_oracle_check(history)
    checker = check_linearizable(history, node_budget=node_budget)
    consistent = not (oracle.ok and checker.verdict == NOT_LINEARIZABLE)
    return CrossReport(oracle, checker, consistent)


def assert_cross_consistent(history: History, **kw) -> CrossReport:
    report = cross_validate(history, **kw)
    if not report.consistent:
        raise HarnessDefect(
            "timeline oracle passed a history the linearizability checker "
            f"rejects; evidence: {report.checker.evidence}"
        )
    return report
