"""Recorded executions: events, operation records, timelines, serialization.

A history is an ordered list of events, each with a global sequence number:

* ``inv`` / ``resp`` -- operation invocation and response, carrying the
  operation description and its result;
* ``step`` -- one shared-memory access (register read/write, entry read, or
  entry apply).  Apply steps carry the old and new entry state, so the full
  memory-state timeline can be re-derived from the event list alone.

Histories serialize to line-delimited JSON: a header line with the memory
layout followed by one event per line, with sorted keys and fixed separators
so equal histories are byte-identical.  Auxiliary in-memory marks (scan
iteration boundaries and the like) are harness-side diagnostics and are not
part of the serialized format.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional

from .core import OBJECT_TYPES, ScenarioError, SnapshotView, resolve_object_types


class MalformedHistory(ValueError):
    """A history violates well-formedness; carries the first offending event."""

    def __init__(self, message: str, event: Optional["Event"] = None):
        super().__init__(message if event is None else f"{message}: {event}")
        self.event = event


@dataclass(frozen=True)
class Event:
    seq: int
    kind: str  # "inv" | "resp" | "step"
    pid: int
    data: dict

    def to_json_obj(self) -> dict:
        obj = {"seq": self.seq, "kind": self.kind, "pid": self.pid}
        obj.update({k: encode_value(v) for k, v in self.data.items()})
        return obj


@dataclass(frozen=True)
class Mark:
    """In-memory diagnostic marker (not serialized)."""

    seq: int  # sequence number of the most recent event when emitted
    pid: int
    data: dict


def encode_value(value: Any) -> Any:
    """JSON-encode a model value, tagging views and tuples for round-trip."""
    if isinstance(value, SnapshotView):
        return {"$view": [encode_value(s) for s in value.states]}
    if isinstance(value, tuple):
        return {"$tuple": [encode_value(v) for v in value]}
    if isinstance(value, list):
        return [encode_value(v) for v in value]
    if isinstance(value, dict):
        return {k: encode_value(v) for k, v in value.items()}
    return value


def decode_value(value: Any) -> Any:
    if isinstance(value, dict):
        if "$view" in value and len(value) == 1:
            return SnapshotView(tuple(decode_value(v) for v in value["$view"]))
        if "$tuple" in value and len(value) == 1:
            return tuple(decode_value(v) for v in value["$tuple"])
        return {k: decode_value(v) for k, v in value.items()}
    if isinstance(value, list):
        return [decode_value(v) for v in value]
    return value


@dataclass
class OpRecord:
    """One operation with its interval and outcome, derived from events."""

    opid: str
    pid: int
    kind: str  # "update" | "scan" | "join"
    inv_seq: int
    resp_seq: Optional[int] = None
    entry: Optional[int] = None
    name: Optional[str] = None
    args: tuple = ()
    result: Any = None  # update result (or None while pending)
    view: Optional[tuple] = None  # scan view states (completed scans)
    apply_seqs: tuple = ()

    @property
    def completed(self) -> bool:
        return self.resp_seq is not None


@dataclass
class History:
    """An execution record over a fixed memory layout."""

    memory: tuple[str, ...]
    events: list[Event] = field(default_factory=list)
    marks: list[Mark] = field(default_factory=list)
    version: int = 1
    start_state: Optional[tuple] = None  # None: every object's declared initial

    # -- construction helpers -------------------------------------------------

    @property
    def initial_state(self) -> tuple:
        if self.start_state is not None:
            return tuple(self.start_state)
        return tuple(t.initial for t in resolve_object_types(self.memory))

    # -- derived structure ----------------------------------------------------

    def validate(self) -> None:
        """Check well-formedness; raise :class:`MalformedHistory` otherwise."""
        last_seq = 0
        open_ops: dict[int, str] = {}  # pid -> opid with pending inv
        seen_opids: set[str] = set()
        for ev in self.events:
            if ev.seq <= last_seq:
                raise MalformedHistory("non-increasing sequence number", ev)
            last_seq = ev.seq
            if ev.kind == "inv":
                if ev.pid in open_ops:
                    raise MalformedHistory(
                        f"process {ev.pid} invoked an operation while one is open", ev
                    )
                opid = ev.data.get("opid")
                if opid is None or opid in seen_opids:
                    raise MalformedHistory("missing or duplicate operation id", ev)
                seen_opids.add(opid)
                open_ops[ev.pid] = opid
            elif ev.kind == "resp":
                opid = ev.data.get("opid")
                if open_ops.get(ev.pid) != opid:
                    raise MalformedHistory(
                        f"response does not match the open operation of process {ev.pid}",
                        ev,
                    )
                del open_ops[ev.pid]
            elif ev.kind == "step":
                if ev.pid not in open_ops:
                    raise MalformedHistory(
                        f"step by process {ev.pid} outside any operation", ev
                    )
            else:
                raise MalformedHistory(f"unknown event kind {ev.kind!r}", ev)

    def op_records(self) -> dict[str, OpRecord]:
        """Operation records keyed by operation id, in invocation order."""
        records: dict[str, OpRecord] = {}
        for ev in self.events:
            if ev.kind == "inv":
                records[ev.data["opid"]] = OpRecord(
                    opid=ev.data["opid"],
                    pid=ev.pid,
                    kind=ev.data["op"],
                    inv_seq=ev.seq,
                    entry=ev.data.get("entry"),
                    name=ev.data.get("name"),
                    args=tuple(ev.data.get("args", ())),
                )
            elif ev.kind == "resp":
                rec = records[ev.data["opid"]]
                rec.resp_seq = ev.seq
                if rec.kind == "scan":
                    view = ev.data.get("view")
                    rec.view = tuple(view) if view is not None else None
                else:
                    rec.result = ev.data.get("result")
            elif ev.kind == "step" and ev.data.get("op") == "apply":
                opid = ev.data.get("opid")
                if opid in records:
                    records[opid].apply_seqs = records[opid].apply_seqs + (ev.seq,)
        return records

    def mutations(self) -> list[tuple[int, int, Any, Any]]:
        """Ordered ``(seq, entry, old state, new state)`` apply records."""
        out = []
        for ev in self.events:
            if ev.kind == "step" and ev.data.get("op") == "apply":
                out.append((ev.seq, ev.data["entry"], ev.data["old"], ev.data["new"]))
        return out

    def state_timeline(self) -> list[tuple[int, tuple]]:
        """Change points ``(seq, full memory state)``; starts at seq 0."""
        state = self.initial_state
        timeline = [(0, state)]
        for seq, entry, old, new in self.mutations():
            if state[entry - 1] != old:
                raise MalformedHistory(
                    f"apply at seq {seq} recorded old state {old!r} "
                    f"but the timeline holds {state[entry - 1]!r}"
                )
            state = state[: entry - 1] + (new,) + state[entry:]
            timeline.append((seq, state))
        return timeline

    def states_in_window(self, lo: int, hi: int) -> set:
        """All instantaneous memory states within sequence window [lo, hi]."""
        timeline = self.state_timeline()
        states = set()
        current = timeline[0][1]
        for seq, state in timeline:
            if seq <= lo:
                current = state
            elif seq <= hi:
                states.add(state)
        states.add(current)
        return states

    # -- serialization --------------------------------------------------------

    def to_jsonl(self) -> str:
        header = {"kind": "header", "memory": list(self.memory), "version": self.version}
        if self.start_state is not None:
            header["start"] = [encode_value(v) for v in self.start_state]
        lines = [json.dumps(header, sort_keys=True, separators=(",", ":"))]
        for ev in self.events:
            lines.append(
                json.dumps(ev.to_json_obj(), sort_keys=True, separators=(",", ":"))
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "History":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise MalformedHistory("empty history file")
        header = json.loads(lines[0])
        if header.get("kind") != "header" or "memory" not in header:
            raise MalformedHistory("missing history header line")
        for name in header["memory"]:
            if name not in OBJECT_TYPES:
                raise ScenarioError(f"unknown object type {name!r} in history header")
        events = []
        for ln in lines[1:]:
            obj = json.loads(ln)
            seq, kind, pid = obj.pop("seq"), obj.pop("kind"), obj.pop("pid")
            data = {k: decode_value(v) for k, v in obj.items()}
            events.append(Event(seq, kind, pid, data))
        start = header.get("start")
        return cls(
            memory=tuple(header["memory"]),
            events=events,
            version=header.get("version", 1),
            start_state=tuple(decode_value(v) for v in start) if start is not None else None,
        )

    def digest(self) -> str:
        return hashlib.sha256(self.to_jsonl().encode()).hexdigest()
