"""Scenario files: versioned TOML descriptions of processes and their scripts.

A scenario pins everything semantic about a run -- memory layout, process
scripts, registry capacity -- plus a default variant and collect order that
the command line may override.  Its digest (SHA-256 over a canonical JSON
rendering of the structural fields) ties recorded schedules and reports back
to the exact scenario they were produced from.

Example::

    version = 1
    name = "n2-basic"
    variant = "conc-wf"
    memory = ["counter", "counter"]

    [[process]]
    id = 1
    ops = [
      { kind = "update", entry = 1, name = "add", args = [1] },
      { kind = "scan" },
    ]

    [[process]]
    id = 2
    ops = [
      { kind = "update", entry = 2, name = "add", args = [2] },
      { kind = "scan" },
    ]

    [explore]
    mode = "exhaustive"

For the unbounded family, a process that scripts a ``join`` op registers
during the run; processes without one are registered from the start (and
must occupy the lowest slots, since registration order is dense).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Optional

try:  # Python 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .core import (
    OBJECT_TYPES,
    VARIANT_FAMILY,
    VARIANTS,
    CollectOrder,
    ScenarioError,
    apply_mutant,
)
from .sim import OpSpec, SimConfig

SCENARIO_VERSION = 1
EXPLORE_MODES = ("exhaustive", "preemption", "random")


@dataclass(frozen=True)
class Scenario:
    name: str
    variant: str
    memory: tuple[str, ...]
    processes: tuple[tuple[int, tuple[OpSpec, ...]], ...]
    collect_order: str = "asc"
    capacity: int = 0
    version: int = SCENARIO_VERSION
    explore_defaults: Mapping[str, Any] = field(default_factory=dict, compare=False)

    @property
    def family(self) -> str:
        return VARIANT_FAMILY[self.variant]

    def digest(self) -> str:
        doc = {
            "version": self.version,
            "name": self.name,
            "memory": list(self.memory),
            "capacity": self.capacity,
            "processes": [
                {
                    "id": pid,
                    "ops": [
                        {
                            "kind": op.kind,
                            "entry": op.entry,
                            "name": op.name,
                            "args": list(op.args),
                        }
                        for op in ops
                    ],
                }
                for pid, ops in self.processes
            ],
        }
        canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    def with_overrides(
        self, variant: Optional[str] = None, collect_order: Optional[str] = None
    ) -> "Scenario":
        out = self
        if variant is not None and variant != self.variant:
            if VARIANT_FAMILY.get(variant) != self.family:
                raise ScenarioError(
                    f"variant {variant!r} is from family "
                    f"{VARIANT_FAMILY.get(variant)!r}; scenario "
                    f"{self.name!r} needs family {self.family!r}"
                )
            out = replace(out, variant=variant)
        if collect_order is not None:
            CollectOrder(collect_order)  # validate
            out = replace(out, collect_order=collect_order)
        return out

    def sim_config(
        self,
        *,
        mutant: Optional[str] = None,
        record: bool = False,
        stamp_meta: bool = False,
        iteration_cap: int = 1000,
    ) -> SimConfig:
        rules = VARIANTS[self.variant]
        if mutant is not None:
            rules = apply_mutant(rules, mutant, self.family)
        scripts = {pid: ops for pid, ops in self.processes}
        initial = frozenset(
            pid
            for pid, ops in self.processes
            if not any(op.kind == "join" for op in ops)
        )
        cfg = SimConfig(
            family=self.family,
            rules=rules,
            memory=self.memory,
            scripts=scripts,
            order=CollectOrder(self.collect_order),
            capacity=self.capacity,
            initial_joined=initial if self.family == "unbounded" else frozenset(),
            record=record,
            stamp_meta=stamp_meta,
            iteration_cap=iteration_cap,
        )
        cfg.validate()
        return cfg


def parse_scenario(doc: Mapping[str, Any], source: str = "<scenario>") -> Scenario:
    def fail(msg: str):
        raise ScenarioError(f"{source}: {msg}")

    version = doc.get("version")
    if version != SCENARIO_VERSION:
        fail(f"unsupported scenario version {version!r} (expected {SCENARIO_VERSION})")
    name = doc.get("name")
    if not isinstance(name, str) or not name:
        fail("missing scenario name")
    variant = doc.get("variant")
    if variant not in VARIANTS:
        fail(f"unknown variant {variant!r}; choose from {sorted(VARIANTS)}")
    memory = doc.get("memory")
    if not isinstance(memory, list) or not memory:
        fail("memory must be a non-empty list of object type names")
    for t in memory:
        if t not in OBJECT_TYPES:
            fail(f"unknown object type {t!r}; choose from {sorted(OBJECT_TYPES)}")
    collect_order = doc.get("collect_order", "asc")
    try:
        CollectOrder(collect_order)
    except ScenarioError as exc:
        fail(str(exc))
    capacity = doc.get("capacity", 0)
    if not isinstance(capacity, int) or capacity < 0:
        fail("capacity must be a non-negative integer")
    raw_procs = doc.get("process")
    if not isinstance(raw_procs, list) or not raw_procs:
        fail("at least one [[process]] table is required")
    processes = []
    for i, p in enumerate(raw_procs):
        pid = p.get("id")
        if not isinstance(pid, int) or pid < 1:
            fail(f"process #{i + 1}: id must be a positive integer")
        ops = []
        raw_ops = p.get("ops")
        if not isinstance(raw_ops, list):
            fail(f"process {pid}: ops must be a list of op tables")
        for j, o in enumerate(raw_ops):
            kind = o.get("kind")
            if kind == "scan":
                ops.append(OpSpec("scan"))
            elif kind == "join":
                ops.append(OpSpec("join"))
            elif kind == "update":
                entry = o.get("entry")
                opname = o.get("name")
                args = o.get("args", [])
                if not isinstance(entry, int) or not 1 <= entry <= len(memory):
                    fail(f"process {pid} op #{j + 1}: entry must be in 1..{len(memory)}")
                obj = OBJECT_TYPES[memory[entry - 1]]
                if opname not in obj.ops:
                    fail(
                        f"process {pid} op #{j + 1}: object type {obj.name!r} "
                        f"has no operation {opname!r}"
                    )
                if not isinstance(args, list):
                    fail(f"process {pid} op #{j + 1}: args must be a list")
                ops.append(OpSpec("update", entry, opname, tuple(args)))
            else:
                fail(f"process {pid} op #{j + 1}: unknown kind {kind!r}")
        processes.append((pid, tuple(ops)))
    ids = [pid for pid, _ in processes]
    if sorted(ids) != list(range(1, len(ids) + 1)):
        fail(f"process ids must be dense from 1; got {sorted(ids)}")
    processes.sort(key=lambda pr: pr[0])
    explore = doc.get("explore", {})
    if not isinstance(explore, Mapping):
        fail("[explore] must be a table")
    mode = explore.get("mode", "exhaustive")
    if mode not in EXPLORE_MODES:
        fail(f"explore mode must be one of {EXPLORE_MODES}")
    defaults = {
        "mode": mode,
        "preemptions": explore.get("preemptions", 3),
        "runs": explore.get("runs", 1000),
        "seed": explore.get("seed", 1),
        "crashes": explore.get("crashes", 0),
    }
    for k in ("preemptions", "runs", "seed", "crashes"):
        if not isinstance(defaults[k], int) or defaults[k] < 0:
            fail(f"explore.{k} must be a non-negative integer")
    scenario = Scenario(
        name=name,
        variant=variant,
        memory=tuple(memory),
        processes=tuple(processes),
        collect_order=collect_order,
        capacity=capacity,
        explore_defaults=defaults,
    )
    scenario.sim_config()  # surface structural errors at load time
    return scenario


def load_scenario(path) -> Scenario:
    p = Path(path)
    try:
        doc = tomllib.loads(p.read_text())
    except FileNotFoundError:
        raise ScenarioError(f"scenario file not found: {p}")
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"{p}: invalid TOML: {exc}")
    return parse_scenario(doc, source=str(p))
