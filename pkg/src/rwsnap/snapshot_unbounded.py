"""Snapshot algorithm for unboundedly many processes.

Processes register on first use: a dense registry assigns slot ids in join
order, and a process's join step writes 0 to its progress slot (unjoined
slots read as -1).  Updates work exactly as in the fixed-n algorithm, against
the joiner's own slot.

Scans collect the registry instead of a fixed counter array, so the set of
known participants can grow between collects.  The quiet test additionally
requires any newly seen participant to still be inside its first update
(progress <= 2), and the writer bound discounts newly seen participants whose
help slot is still empty -- both reads taken at evaluation time.  The borrow
check gains a second trigger: a participant that was absent from the scan's
very first registry collect and has already published a help view must have
produced that view entirely within this scan's interval, so it can be
returned immediately.  That trigger is what defeats adversaries that throw an
endless stream of fresh joiners at a scan.
"""

from __future__ import annotations

from typing import Iterator

from .core import (
    EMPTY_COLLECT,
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
    UNJOINED,
    WindowMark,
    WriteCell,
    accumulate_moves_unbounded,
    collect_entries,
    collect_registry,
    is_steady_unbounded,
    possible_writers_unbounded,
)


def join_gen(ctx: AlgoContext) -> Iterator:
    """Registration: announce participation by zeroing our progress slot."""
    yield WriteCell(PROGRESS, ctx.pid, 0)


def update_gen(ctx: AlgoContext, entry: int, op: str, args: tuple) -> Iterator:
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
    yield ScanBegin(nested)
    moves: dict[int, int] = {}
    initial = EMPTY_COLLECT  # participants seen by our very first collect
    latest = EMPTY_COLLECT  # participants seen by the previous loop body
    iterations = 0
    while True:
        view = None
        path = None
        for j in latest.ids:
            if rules.wait_free and moves.get(j, 0) >= rules.help_threshold:
                view = yield ReadCell(HELP, j)
                path = "borrowed"
                break
            if initial.ids and j not in initial:
                candidate = yield ReadCell(HELP, j)
                if candidate is not None:
                    view = candidate
                    path = "borrowed-new"
                    break
        if path is not None:
            yield ScanEnd(view, path, iterations)
            return view
        iterations += 1
        yield IterBegin(iterations)
        before = yield from collect_registry()
        view = yield from collect_entries(ctx.next_mem_order())
        after = yield from collect_registry()
        yield WindowMark(before, after)
        if not initial.ids:
            initial = before  # set once; never refreshed
        if is_steady_unbounded(
            before, after, guard_new_joiners=rules.guard_new_joiners
        ):
            fresh_help = {}
            for j in after.ids:
                if j not in before:
                    fresh_help[j] = yield ReadCell(HELP, j)
            writers = possible_writers_unbounded(before, after, fresh_help)
            if writers <= 1:
                yield ScanEnd(view, "direct", iterations)
                return view
            matched = True
            for _ in range(writers // 2):
                again = yield from collect_entries(ctx.next_mem_order())
                if again != view:
                    matched = False
                    break
            if matched:
                if rules.verify_settled:
                    settled = yield from collect_registry()
                    if settled == after:  # same ids and same values
                        yield ScanEnd(view, "settled", iterations)
                        return view
                    after = settled
                else:
                    yield ScanEnd(view, "settled", iterations)
                    return view
        moves = accumulate_moves_unbounded(moves, before, after)
        latest = after


class UnboundedAlgorithm:
    """Descriptor tying the registry-based generators to their cell layout."""

    family = "unbounded"
    solo_updates = False
    has_join = True

    def __init__(self, rules: Ruleset):
        self.rules = rules

    def progress_slots(self, n: int, capacity: int) -> list[int]:
        return [UNJOINED] * max(capacity, n)

    def help_slots(self, n: int, capacity: int) -> list:
        return [None] * max(capacity, n)

    def make_join(self, ctx: AlgoContext) -> Iterator:
        return join_gen(ctx)

    def make_update(self, ctx: AlgoContext, entry: int, op: str, args: tuple) -> Iterator:
        return update_gen(ctx, entry, op, args)

    def make_scan(self, ctx: AlgoContext) -> Iterator:
        return scan_gen(ctx)

    def iteration_bound(self, n: int) -> int | None:
        return None  # wait-free, but with no closed-form loop bound
