"""Step-complexity sweep for the fixed-n snapshot under contention.

The wait-free scan's loop count is bounded by observed progress, and each
loop body costs a bounded number of shared-cell accesses, so the steps any
single scan performs before answering grow at most as ``n**2 * m`` (loop
bound linear in n, body cost linear in n + m plus up to n/2 re-collects of m
entries).  This bench measures the worst scan observed across adversarial
schedules for each (n, m) cell and exhibits the single coefficient ``c`` with
``max_scan_steps <= c * n**2 * m`` over the whole sweep.

Schedules are deterministic: a fixed family of rotating round-robin drives
(one step per process in shifting order, which maximizes collect/update
interleaving) plus a seeded stream of random step choices.  Everything runs
on the simulator, so a reported maximum is replayable.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Optional

from .core import CollectOrder, ScenarioError, VARIANTS, VARIANT_FAMILY
from .sim import Execution, OpSpec, SimConfig


@dataclass(frozen=True)
class BenchConfig:
    sizes: tuple[int, ...] = (2, 4, 8)  # both the n-axis and the m-axis
    variant: str = "conc-wf"
    random_runs: int = 100
    rotation_runs: int = 20
    seed: int = 1
    collect_order: CollectOrder = field(default_factory=lambda: CollectOrder("asc"))

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise ScenarioError(f"unknown variant {self.variant!r}")
        if VARIANT_FAMILY[self.variant] == "solo":
            raise ScenarioError("the sweep drives concurrent updaters")
        if any(s < 1 for s in self.sizes) or not self.sizes:
            raise ScenarioError("sizes must be positive")


@dataclass
class BenchCell:
    n: int
    m: int
    max_scan_steps: int
    ratio: float  # max_scan_steps / (n**2 * m)
    runs: int


@dataclass
class BenchReport:
    variant: str
    cells: list[BenchCell]
    coefficient: float  # smallest c covering every cell
    quiescent_scan_steps: int
    elapsed: float


def _cell_config(cfg: BenchConfig, n: int, m: int) -> SimConfig:
    """Contention workload: every process updates a spread entry and the
    shared hot entry, with a scan between and after."""
    scripts = {}
    for pid in range(1, n + 1):
        spread = (pid - 1) % m + 1
        scripts[pid] = (
            OpSpec("update", spread, "add", (pid,)),
            OpSpec("scan"),
            OpSpec("update", 1, "add", (10 * pid,)),
            OpSpec("scan"),
        )
    return SimConfig(
        family=VARIANT_FAMILY[cfg.variant],
        rules=VARIANTS[cfg.variant],
        memory=("counter",) * m,
        scripts=scripts,
        order=cfg.collect_order,
    )


def _drive_rotation(sim_cfg: SimConfig, phase: int) -> int:
    """One step per runnable process, visiting them in a rotating order."""
    ex = Execution(sim_cfg)
    offset = 0
    while True:
        pids = ex.runnable()
        if not pids:
            break
        pid = pids[(offset + phase) % len(pids)]
        ex.perform(pid)
        offset += 1
    return ex.stats.max_scan_steps


def _drive_random(sim_cfg: SimConfig, rng: random.Random) -> int:
    ex = Execution(sim_cfg)
    while True:
        pids = ex.runnable()
        if not pids:
            break
        ex.perform(pids[rng.randrange(len(pids))])
    return ex.stats.max_scan_steps


def quiescent_solo_scan_steps(m: int = 1) -> int:
    """Steps one uncontended solo-updater scan performs (progress counter,
    each entry, progress counter again)."""
    cfg = SimConfig(
        family="solo",
        rules=VARIANTS["solo-wf"],
        memory=("counter",) * m,
        scripts={1: (OpSpec("scan"),)},
    )
    ex = Execution(cfg)
    while ex.runnable():
        ex.perform(1)
    return ex.stats.max_scan_steps


def run_bench(cfg: BenchConfig = BenchConfig()) -> BenchReport:
    cfg.validate()
    started = time.perf_counter()
    rng = random.Random(cfg.seed)
    cells = []
    for n in cfg.sizes:
        for m in cfg.sizes:
            sim_cfg = _cell_config(cfg, n, m)
            worst = 0
            runs = 0
            for phase in range(cfg.rotation_runs):
                worst = max(worst, _drive_rotation(sim_cfg, phase))
                runs += 1
            for _ in range(cfg.random_runs):
                worst = max(worst, _drive_random(sim_cfg, rng))
                runs += 1
            cells.append(
                BenchCell(n, m, worst, worst / (n * n * m), runs)
            )
    coefficient = max(cell.ratio for cell in cells)
    return BenchReport(
        variant=cfg.variant,
        cells=cells,
        coefficient=coefficient,
        quiescent_scan_steps=quiescent_solo_scan_steps(),
        elapsed=time.perf_counter() - started,
    )
