"""Snapshot algorithm for the solo-updater setting.

One shared progress counter and one shared help slot serve the whole memory.
Updates are assumed never to run concurrently with each other (the harness
enforces this; the operations do not check it), while any number of scans may
run concurrently with everything.

An update bumps the progress counter to an odd value, optionally publishes a
freshly collected view to the help slot (wait-free variant only), applies its
operation to the chosen entry, and bumps the counter again to even.  A scan
repeatedly brackets a full-memory collect between two counter reads; if the
counter advanced by at most one, no two mutations overlapped the collect and
the collect is a genuine snapshot.  In the wait-free variant a scan that has
watched the counter advance by ``help_threshold`` (default 4) instead returns
the published help view, which is then guaranteed to have been collected
entirely inside the scan's own interval.
"""

from __future__ import annotations

from typing import Iterator

from .core import (
    HELP,
    OK,
    PROGRESS,
    AlgoContext,
    ApplyEntry,
    IterBegin,
    ReadCell,
    Ruleset,
    ScanBegin,
    ScanEnd,
    WindowMark,
    WriteCell,
    collect_entries,
)

#: Wait-free scans complete within this many loop bodies (each loop body is
#: one counter/collect/counter bracket; the final borrow check does not open
#: a new body).
SOLO_SCAN_ITERATION_BOUND = 2


def update_gen(ctx: AlgoContext, entry: int, op: str, args: tuple) -> Iterator:
    """One update: bump to odd, optionally publish, apply, bump to even."""
    t = yield ReadCell(PROGRESS, 1)
    yield WriteCell(PROGRESS, 1, t + 1)
    if ctx.rules.publish_help:
        view = yield from collect_entries(ctx.next_mem_order())
        yield WriteCell(HELP, 1, view)
    result = yield ApplyEntry(entry, op, tuple(args))
    yield WriteCell(PROGRESS, 1, t + 2)
    return result if ctx.rules.return_result else OK


def scan_gen(ctx: AlgoContext, nested: bool = False) -> Iterator:
    """One scan: double-collect loop, borrowing the help view when starved."""
    rules = ctx.rules
    yield ScanBegin(nested)
    moves = 0
    iterations = 0
    while True:
        if rules.wait_free and moves >= rules.help_threshold:
            view = yield ReadCell(HELP, 1)
            yield ScanEnd(view, "borrowed", iterations)
            return view
        iterations += 1
        yield IterBegin(iterations)
        before = yield ReadCell(PROGRESS, 1)
        view = yield from collect_entries(ctx.next_mem_order())
        after = yield ReadCell(PROGRESS, 1)
        yield WindowMark(before, after)
        if after - before <= 1:
            yield ScanEnd(view, "direct", iterations)
            return view
        if rules.wait_free:
            moves += after - before


class SoloAlgorithm:
    """Descriptor tying the solo generators to their shared-cell layout."""

    family = "solo"
    solo_updates = True
    has_join = False

    def __init__(self, rules: Ruleset):
        self.rules = rules

    def progress_slots(self, n: int, capacity: int) -> list[int]:
        return [0]  # a single counter, regardless of process count

    def help_slots(self, n: int, capacity: int) -> list:
        return [None]

    def make_update(self, ctx: AlgoContext, entry: int, op: str, args: tuple) -> Iterator:
        return update_gen(ctx, entry, op, args)

    def make_scan(self, ctx: AlgoContext) -> Iterator:
        return scan_gen(ctx)

    def iteration_bound(self, n: int) -> int:
        return SOLO_SCAN_ITERATION_BOUND
