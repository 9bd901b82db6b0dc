"""Behavioural tests for the solo-updater snapshot algorithm."""

from rwsnap.core import VARIANTS
from rwsnap.sim import Execution, OpSpec, SimConfig
from rwsnap.snapshot_solo import SOLO_SCAN_ITERATION_BOUND, SoloAlgorithm

ADD1 = OpSpec("update", 1, "add", (1,))
SCAN = OpSpec("scan")


def make(scripts, variant="solo-wf", memory=("counter",)):
    return Execution(SimConfig("solo", VARIANTS[variant], memory, scripts))


def run_out(ex, pid):
    while pid in ex.runnable():
        ex.perform(pid)


def full_update(ex, pid, steps):
    for _ in range(steps):
        ex.perform(pid)


def test_descriptor_layout():
    algo = SoloAlgorithm(VARIANTS["solo-wf"])
    assert algo.family == "solo" and algo.solo_updates and not algo.has_join
    assert algo.progress_slots(5, 5) == [0]
    assert algo.help_slots(5, 5) == [None]
    assert algo.iteration_bound(3) == SOLO_SCAN_ITERATION_BOUND == 2


def test_update_step_counts():
    # wait-free updates publish a help view: read, bump, collect, publish,
    # apply, bump = 6 shared-memory steps for a single-entry memory
    ex = make({1: (ADD1,)})
    steps = 0
    while ex.runnable():
        ex.perform(1)
        steps += 1
    assert steps == 6
    # the lock-free variant skips the publish: read, bump, apply, bump
    ex = make({1: (ADD1,)}, variant="solo-lf")
    steps = 0
    while ex.runnable():
        ex.perform(1)
        steps += 1
    assert steps == 4


def test_overlapping_single_update_resolves_direct():
    ex = make({1: (SCAN,), 2: (ADD1,)})
    ex.perform(1)  # before-read sees counter 0
    full_update(ex, 2, 6)  # a whole update lands inside the bracket
    run_out(ex, 1)  # collect + after-read: counter moved by 2, retry...
    assert ex.stats.scan_paths == {"direct": 1}
    assert ex.stats.max_scan_iterations == 2  # second bracket runs alone
    assert ex.results[1] == [("scan", (1,))]
    assert not ex.violations


def test_waitfree_scan_borrows_after_two_full_updates():
    ex = make({1: (SCAN,), 2: (ADD1, ADD1)})
    ex.perform(1)  # before-read sees counter 0
    full_update(ex, 2, 6)
    full_update(ex, 2, 6)
    run_out(ex, 1)
    # counter moved by 4 inside one bracket -> threshold met -> borrow the
    # second update's pre-apply view
    assert ex.stats.scan_paths == {"borrowed": 1}
    assert ex.stats.max_scan_iterations == 1  # borrow check opens no new body
    assert ex.results[1] == [("scan", (1,))]
    assert not ex.violations
    assert not ex.stats.bound_exceeded


def test_lockfree_scan_can_be_starved():
    rounds = 5
    ex = make({1: (SCAN,), 2: tuple(ADD1 for _ in range(rounds + 1))},
              variant="solo-lf")
    ex.perform(1)  # ScanBegin + first before-read
    for _ in range(rounds):
        full_update(ex, 2, 4)
        ex.perform(1)  # collect
        ex.perform(1)  # after-read: delta 2 every time, never direct
        ex.perform(1)  # next bracket's before-read
    run_out(ex, 1)  # updater quiescent: final bracket succeeds
    assert ex.stats.max_scan_iterations == rounds + 1
    assert ex.stats.scan_paths == {"direct": 1}
    assert ex.results[1] == [("scan", (rounds,))]
    # the scan exceeded the wait-free bound, but this variant never claimed
    # wait-freedom, so nothing is flagged
    assert not ex.stats.bound_exceeded
    assert not ex.violations


def test_waitfree_iterations_never_exceed_bound():
    # same adversary as the starvation test, but the wait-free scan escapes
    ex = make({1: (SCAN,), 2: tuple(ADD1 for _ in range(6))})
    ex.perform(1)
    for _ in range(6):
        if 2 not in ex.runnable() or 1 not in ex.runnable():
            break  # scan already escaped (or adversary exhausted)
        full_update(ex, 2, 6)
        if 1 in ex.runnable():
            ex.perform(1)
    run_out(ex, 1)
    assert ex.stats.scans_completed == 1
    assert ex.stats.max_scan_iterations <= SOLO_SCAN_ITERATION_BOUND
    assert not ex.stats.bound_exceeded
    assert not ex.violations


def test_updates_publish_pre_apply_views():
    # the help slot always holds the memory as it was before the publishing
    # update's own mutation
    ex = make({1: (ADD1, ADD1, ADD1)})
    seen = []
    while ex.runnable():
        ex.perform(1)
        if ex.help[0] is not None:
            seen.append(tuple(ex.help[0].states))
    assert seen[0] == (0,)
    assert (1,) in seen and (2,) in seen
    assert ex.mem == [3]


def test_solo_updater_never_runs_a_nested_scan():
    ex = make({1: (ADD1, ADD1), 2: (SCAN,)})
    while ex.runnable():
        ex.perform(ex.runnable()[0])
    assert ex.stats.max_nested_iterations == 0
    assert all(not p.startswith("nested:") for p in ex.stats.scan_paths)
