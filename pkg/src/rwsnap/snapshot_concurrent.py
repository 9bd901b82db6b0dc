"""Snapshot algorithm for a fixed set of n concurrent updaters.

Every process owns one progress counter and one help slot.  An update bumps
its own counter to odd, publishes a full scan's view to its help slot
(wait-free variant), applies its operation, and bumps the counter back to
even.  A scan brackets a full-memory collect between two collects of all
progress counters:

* if some counter advanced by two or more, the loop body failed outright;
* otherwise the counter deltas bound how many processes may have mutated
  during the collect.  If at most one did, the collect is a snapshot.  If up
  to ``w`` did, the scan re-collects ``w // 2`` more times: equal re-collects
  plus an unchanged third counter collect certify, by a pigeonhole argument
  over at most ``w`` overlapping mutations, that some collect saw at most one
  mutation -- so the common view is a snapshot.

In the wait-free variant a scan also tallies observed counter increments per
process (``moves``); once a process has moved ``help_threshold`` (default 4)
times within the scan, that process's published help view was necessarily
collected inside this scan's interval and is returned directly.

Variants: lock-free (no help machinery), wait-free (all of the above), and a
deliberately blocking variant that drops the re-collect rescue and returns
only from quiet double collects -- still linearizable, but a steady stream of
updates starves it forever.
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
    collect_counters,
    collect_entries,
    is_steady,
    possible_writers,
)


def conc_scan_iteration_bound(n: int) -> int:
    """Wait-free scans complete within ``4 * 2 * (n - 1)`` loop bodies."""
    return 4 * 2 * (n - 1)


def update_gen(ctx: AlgoContext, entry: int, op: str, args: tuple) -> Iterator:
    """One update by process ``ctx.pid``."""
    me = ctx.pid
    t = yield ReadCell(PROGRESS, me)
    yield WriteCell(PROGRESS, me, t + 1)
    if ctx.rules.publish_help:
        view = yield from scan_gen(ctx, nested=True)
        yield WriteCell(HELP, me, view)
    result = yield ApplyEntry(entry, op, tuple(args))
    yield WriteCell(PROGRESS, me, t + 2)
    return result if ctx.rules.return_result else OK


def scan_gen(ctx: AlgoContext, nested: bool = False) -> Iterator:
    rules = ctx.rules
    n = ctx.n
    yield ScanBegin(nested)
    moves = [0] * (n + 1)  # 1-based; index 0 unused
    iterations = 0
    while True:
        if rules.wait_free:
            helper = next(
                (j for j in range(1, n + 1) if moves[j] >= rules.help_threshold), None
            )
            if helper is not None:
                view = yield ReadCell(HELP, helper)
                yield ScanEnd(view, "borrowed", iterations)
                return view
        iterations += 1
        yield IterBegin(iterations)
        before = yield from collect_counters(ctx.next_progress_order())
        view = yield from collect_entries(ctx.next_mem_order())
        after = yield from collect_counters(ctx.next_progress_order())
        yield WindowMark(before, after)
        if is_steady(before, after):
            writers = possible_writers(before, after)
            if writers <= 1:
                yield ScanEnd(view, "direct", iterations)
                return view
            if rules.retry_rescue:
                matched = True
                for _ in range(writers // 2):
                    again = yield from collect_entries(ctx.next_mem_order())
                    if again != view:
                        matched = False  # a mutation landed; fall through to tallying
                        break
                if matched:
                    if rules.verify_settled:
                        settled = yield from collect_counters(ctx.next_progress_order())
                        if settled == after:
                            yield ScanEnd(view, "settled", iterations)
                            return view
                        if rules.wait_free:
                            after = settled  # tally the extra increments too
                    else:
                        yield ScanEnd(view, "settled", iterations)
                        return view
        if rules.wait_free:
            for j in range(1, n + 1):
                moves[j] += after[j - 1] - before[j - 1]


class ConcurrentAlgorithm:
    """Descriptor tying the fixed-n generators to their shared-cell layout."""

    family = "concurrent"
    solo_updates = False
    has_join = False

    def __init__(self, rules: Ruleset):
        self.rules = rules

    def progress_slots(self, n: int, capacity: int) -> list[int]:
        return [0] * n

    def help_slots(self, n: int, capacity: int) -> list:
        return [None] * n

    def make_update(self, ctx: AlgoContext, entry: int, op: str, args: tuple) -> Iterator:
        return update_gen(ctx, entry, op, args)

    def make_scan(self, ctx: AlgoContext) -> Iterator:
        return scan_gen(ctx)

    def iteration_bound(self, n: int) -> int:
        return conc_scan_iteration_bound(n)
