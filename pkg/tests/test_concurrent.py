"""Behavioural tests for the fixed-n concurrent snapshot algorithm."""

import random

from rwsnap.checker import (
    LINEARIZABLE,
    PASS,
    check_linearizable,
    timeline_oracle_check,
)
from rwsnap.core import VARIANTS
from rwsnap.sim import Execution, OpSpec, SimConfig
from rwsnap.snapshot_concurrent import ConcurrentAlgorithm, conc_scan_iteration_bound

ADD1 = OpSpec("update", 1, "add", (1,))
SCAN = OpSpec("scan")


def make(scripts, variant="conc-wf", memory=("counter",), **kw):
    return Execution(
        SimConfig("concurrent", VARIANTS[variant], memory, scripts, **kw)
    )


def steps_to_finish(ex, pid):
    steps = 0
    while pid in ex.runnable():
        ex.perform(pid)
        steps += 1
    return steps


def complete_updates(ex, pid, count):
    target = ex.stats.updates_completed + count
    while ex.stats.updates_completed < target:
        ex.perform(pid)


def test_descriptor_layout_and_bound():
    algo = ConcurrentAlgorithm(VARIANTS["conc-wf"])
    assert algo.family == "concurrent"
    assert not algo.solo_updates and not algo.has_join
    assert algo.progress_slots(3, 3) == [0, 0, 0]
    assert algo.help_slots(3, 3) == [None, None, None]
    for n in (2, 3, 4):
        assert algo.iteration_bound(n) == conc_scan_iteration_bound(n) == 8 * (n - 1)


def test_update_step_counts():
    # lock-free: read own counter, bump odd, apply, bump even
    ex = make({1: (ADD1,), 2: ()}, variant="conc-lf")
    assert steps_to_finish(ex, 1) == 4
    # wait-free adds a nested scan (2n + m steps when quiescent) plus the
    # help publish: 4 + (2n + m) + 1
    ex = make({1: (ADD1,), 2: ()})
    assert steps_to_finish(ex, 1) == 10
    assert ex.stats.scan_paths == {"nested:direct": 1}
    assert ex.stats.max_nested_iterations == 1
    assert ex.help[0] is not None and tuple(ex.help[0].states) == (0,)
    assert ex.mem == [1]


def test_quiescent_scan_step_count():
    # two counter collects bracketing one memory collect: 2n + m
    ex = make({1: (SCAN,), 2: ()}, memory=("counter", "register"))
    assert steps_to_finish(ex, 1) == 6
    assert ex.stats.scan_paths == {"direct": 1}
    assert ex.stats.max_scan_iterations == 1


def park_mid_update(ex, pid):
    # run an updater through its counter read + odd bump, then stop
    ex.perform(pid)
    ex.perform(pid)
    assert ex.progress[pid - 1] % 2 == 1


def test_settled_path_with_two_parked_updaters():
    ex = make({1: (SCAN,), 2: (ADD1,), 3: (ADD1,)})
    park_mid_update(ex, 2)
    park_mid_update(ex, 3)
    # scan: 3 before + 1 entry + 3 after -> steady, two possible writers ->
    # 1 matching re-collect + 1 unchanged counter collect certify the view
    assert steps_to_finish(ex, 1) == 11
    assert ex.stats.scan_paths == {"settled": 1}
    assert ex.stats.max_scan_iterations == 1
    assert ex.results[1] == [("scan", (0,))]
    assert not ex.violations


def test_third_collect_catches_late_movement():
    ex = make({1: (SCAN,), 2: (ADD1,), 3: (ADD1,)})
    park_mid_update(ex, 2)
    park_mid_update(ex, 3)
    for _ in range(7):  # before collect (3) + entries (1) + after collect (3)
        ex.perform(1)
    ex.perform(1)  # matching re-collect
    complete_updates(ex, 2, 1)  # process 2 finishes before the third collect
    for _ in range(3):
        ex.perform(1)  # third counter collect: differs from the bracket
    steps_to_finish(ex, 1)
    # the settled certificate failed, so the scan went around again and, with
    # only process 3 still parked, resolved directly
    assert ex.stats.max_scan_iterations == 2
    assert ex.stats.scan_paths.get("direct") == 1
    assert "settled" not in ex.stats.scan_paths
    assert ex.results[1] == [("scan", (1,))]
    assert not ex.violations


def test_nested_scan_can_borrow():
    # process 1 parks mid-update; two full updates by process 2 land inside
    # one body of 1's nested scan, so the nested scan borrows 2's help view
    ex = make({1: (ADD1,), 2: (ADD1, ADD1)})
    park_mid_update(ex, 1)
    ex.perform(1)  # nested before-collect: own counter
    ex.perform(1)  # nested before-collect: counter 2 (reads 0)
    complete_updates(ex, 2, 2)
    steps_to_finish(ex, 1)
    assert "nested:borrowed" in ex.stats.scan_paths
    # borrowed view is process 2's second pre-apply publication
    assert tuple(ex.help[0].states) == (1,)
    assert ex.mem == [3]
    assert not ex.violations
    assert not ex.stats.bound_exceeded


def test_blocking_variant_starves_until_quiescence():
    rounds = 6
    ex = make({1: (SCAN,), 2: tuple(ADD1 for _ in range(rounds))},
              variant="conc-blocking")
    for _ in range(rounds):
        for _ in range(3):  # before collect (2) plus the entry collect
            ex.perform(1)
        complete_updates(ex, 2, 1)  # a whole update lands inside the bracket
        ex.perform(1)  # after collect: counter 2 moved by two -> retry
        ex.perform(1)
    steps_to_finish(ex, 1)
    assert ex.stats.max_scan_iterations == rounds + 1
    assert ex.stats.scan_paths == {"direct": 1}
    assert not ex.stats.bound_exceeded  # variant never claimed wait-freedom
    assert not ex.violations


def test_blocking_variant_rules():
    rules = VARIANTS["conc-blocking"]
    assert not rules.wait_free and not rules.publish_help
    assert not rules.retry_rescue


def test_random_interleavings_pass_both_judges():
    rng = random.Random(3)
    for _ in range(20):
        cfg = SimConfig(
            "concurrent", VARIANTS["conc-wf"], ("counter", "register"),
            {1: (SCAN, OpSpec("update", 2, "write", (5,))),
             2: (ADD1, SCAN)},
            record=True,
        )
        ex = Execution(cfg)
        while True:
            runnable = ex.runnable()
            if not runnable:
                break
            ex.perform(rng.choice(runnable))
        assert not ex.violations
        hist = ex.history()
        hist.validate()
        assert timeline_oracle_check(hist).verdict == PASS
        assert check_linearizable(hist).verdict == LINEARIZABLE
