"""Tests for the step-granular simulator: scheduling, fork/restore, results."""

import pytest

from rwsnap.core import (
    OK,
    UNJOINED,
    ExplorationOverflow,
    ReadCell,
    ScenarioError,
    VARIANTS,
)
from rwsnap.sim import (
    Execution,
    OpSpec,
    SimConfig,
    crash_token,
    parse_token,
    run_schedule,
)

UPD = lambda entry, k: OpSpec("update", entry, "add", (k,))
SCAN = OpSpec("scan")


def solo_cfg(scripts, memory=("counter",), **kw):
    return SimConfig(family="solo", rules=VARIANTS["solo-wf"], memory=memory,
                     scripts=scripts, **kw)


def conc_cfg(scripts, memory=("counter",), variant="conc-wf", **kw):
    return SimConfig(family="concurrent", rules=VARIANTS[variant], memory=memory,
                     scripts=scripts, **kw)


def drain(ex):
    while True:
        runnable = ex.runnable()
        if not runnable:
            return ex
        ex.perform(runnable[0])


# ---------------------------------------------------------------------------
# Config validation
# ---------------------------------------------------------------------------


def test_validate_rejects_bad_configs():
    with pytest.raises(ScenarioError):
        SimConfig("nosuch", VARIANTS["conc-wf"], ("counter",), {1: ()}).validate()
    with pytest.raises(ScenarioError):
        conc_cfg({2: (SCAN,)}).validate()  # ids must be dense from 1
    with pytest.raises(ScenarioError):
        conc_cfg({1: (UPD(2, 1),)}).validate()  # entry out of range
    with pytest.raises(ScenarioError):
        conc_cfg({1: (OpSpec("join"),)}).validate()  # join needs unbounded
    with pytest.raises(ScenarioError):
        SimConfig("concurrent", VARIANTS["conc-wf"], (), {1: (SCAN,)}).validate()


def test_validate_unbounded_join_rules():
    base = dict(family="unbounded", rules=VARIANTS["unbounded"], memory=("counter",))
    SimConfig(**base, scripts={1: (OpSpec("join"), SCAN)}).validate()
    with pytest.raises(ScenarioError):  # pre-joined must form a prefix
        SimConfig(**base, scripts={1: (SCAN,), 2: (SCAN,)},
                  initial_joined=frozenset({2})).validate()
    with pytest.raises(ScenarioError):  # pre-joined process also scripts a join
        SimConfig(**base, scripts={1: (OpSpec("join"), SCAN)},
                  initial_joined=frozenset({1})).validate()
    with pytest.raises(ScenarioError):  # must join before anything else
        SimConfig(**base, scripts={1: (SCAN, OpSpec("join"))}).validate()
    with pytest.raises(ScenarioError):  # at most one join
        SimConfig(**base, scripts={1: (OpSpec("join"), OpSpec("join"))}).validate()


# ---------------------------------------------------------------------------
# Basic running and results
# ---------------------------------------------------------------------------


def test_solo_quiescent_scan_is_three_steps():
    ex = Execution(solo_cfg({1: (SCAN,)}))
    steps = 0
    while ex.runnable():
        ex.perform(1)
        steps += 1
    assert steps == 3
    assert ex.stats.max_scan_steps == 3
    assert ex.stats.scan_paths == {"direct": 1}
    assert ex.results[1] == [("scan", (0,))]


def test_solo_update_is_six_steps():
    ex = Execution(solo_cfg({1: (UPD(1, 5),)}))
    steps = 0
    while ex.runnable():
        ex.perform(1)
        steps += 1
    assert steps == 6
    assert ex.mem == [5]
    assert ex.results[1] == [("update", 5)]


def test_update_results_carry_object_results():
    cfg = conc_cfg(
        {1: (OpSpec("update", 1, "write", (5,)), OpSpec("update", 1, "write", (7,)))},
        memory=("register",),
    )
    ex = drain(Execution(cfg))
    # register writes return the overwritten value
    assert ex.results[1] == [("update", 0), ("update", 5)]


def test_return_result_off_returns_plain_ok():
    from dataclasses import replace

    rules = replace(VARIANTS["conc-wf"], return_result=False)
    cfg = SimConfig("concurrent", rules, ("counter",), {1: (UPD(1, 3),)})
    ex = drain(Execution(cfg))
    assert ex.results[1] == [("update", OK)]


def test_completed_execution_flags():
    ex = drain(Execution(conc_cfg({1: (UPD(1, 1),), 2: (SCAN,)})))
    assert ex.done and ex.completed
    assert ex.stats.updates_completed == 1 and ex.stats.scans_completed == 1
    assert not ex.violations


# ---------------------------------------------------------------------------
# Scheduling gates
# ---------------------------------------------------------------------------


def test_solo_update_gate_blocks_concurrent_updates():
    ex = Execution(solo_cfg({1: (UPD(1, 1),), 2: (UPD(1, 2),), 3: (SCAN,)}))
    assert ex.runnable() == [1, 2, 3]
    ex.perform(1)  # process 1 is now mid-update
    assert ex.runnable() == [1, 3]  # other updaters gated; scans free
    for _ in range(5):
        ex.perform(1)
    assert ex.runnable() == [2, 3]  # gate released on completion


def test_crashed_solo_updater_blocks_peers_forever():
    ex = Execution(solo_cfg({1: (UPD(1, 1),), 2: (UPD(1, 2),)}))
    ex.perform(1)
    ex.crash(1)
    assert ex.runnable() == []  # terminal: process 2 is gated behind a corpse
    assert ex.done and not ex.completed
    with pytest.raises(ScenarioError):
        ex.perform(1)
    with pytest.raises(ScenarioError):
        ex.crash(1)


def test_unbounded_join_order_is_dense():
    cfg = SimConfig(
        "unbounded", VARIANTS["unbounded"], ("counter",),
        scripts={1: (SCAN,), 2: (OpSpec("join"), UPD(1, 1)), 3: (OpSpec("join"), SCAN)},
        initial_joined=frozenset({1}),
    )
    ex = Execution(cfg)
    assert ex.runnable() == [1, 2]  # 3 must wait for 2's registration
    assert ex.crashable() == [1]  # unjoined processes cannot crash
    ex.perform(2)  # join writes slot 2
    assert ex.progress[1] == 0
    assert ex.runnable() == [1, 2, 3]
    assert ex.crashable() == [1, 2]


# ---------------------------------------------------------------------------
# Peek / tokens / schedules
# ---------------------------------------------------------------------------


def test_peek_exposes_next_request_without_consuming():
    ex = Execution(conc_cfg({1: (UPD(1, 1),)}))
    req = ex.peek(1)
    assert isinstance(req, ReadCell)
    assert ex.peek(1) is req
    ex.perform(1)  # performs exactly the peeked request: the progress read
    assert ex.progress == [0]
    ex.perform(1)  # next request is the odd-parity progress write
    assert ex.progress == [1]
    ex.crash(1)
    with pytest.raises(ScenarioError):
        ex.peek(1)


def test_parse_token_forms():
    assert parse_token(3) == ("step", 3)
    assert parse_token("7") == ("step", 7)
    assert parse_token("crash:2") == ("crash", 2)
    assert crash_token(4) == "crash:4"
    with pytest.raises(ScenarioError):
        parse_token("boom")
    with pytest.raises(ScenarioError):
        parse_token(2.5)


def test_run_schedule_validates_tokens():
    cfg = conc_cfg({1: (UPD(1, 1),)})
    with pytest.raises(ScenarioError):
        run_schedule(cfg, [2])  # no such process
    with pytest.raises(ScenarioError):
        run_schedule(cfg, [1] * 11)  # runs past completion
    with pytest.raises(ScenarioError):
        run_schedule(cfg, [1], require_done=True)
    ex = run_schedule(cfg, [1, "crash:1"])
    assert ex.machines[1].crashed and ex.done


def test_schedules_are_deterministic():
    cfg = conc_cfg({1: (UPD(1, 1), SCAN), 2: (UPD(1, 2), SCAN)}, record=True)
    # derive a legal round-robin token sequence from a live run
    probe = Execution(SimConfig(**{**cfg.__dict__, "record": False}))
    tokens, turn = [], 0
    while True:
        runnable = probe.runnable()
        if not runnable:
            break
        pid = runnable[turn % len(runnable)]
        turn += 1
        probe.perform(pid)
        tokens.append(pid)
    a = run_schedule(cfg, tokens, require_done=True)
    b = run_schedule(cfg, tokens, require_done=True)
    assert a.history().digest() == b.history().digest()
    assert a.results == b.results


# ---------------------------------------------------------------------------
# Fork / restore
# ---------------------------------------------------------------------------


def _observable(ex):
    return (
        tuple(ex.progress), tuple(ex.help), tuple(ex.mem),
        tuple(sorted((v.kind, v.opid) for v in ex.violations)),
    )


def test_fork_preserves_future_behaviour():
    cfg = conc_cfg({1: (UPD(1, 1), SCAN), 2: (UPD(1, 2), SCAN)})
    ex = Execution(cfg)
    prefix = [1, 2, 1, 1, 2, 1, 2, 2, 1]
    for pid in prefix:
        ex.perform(pid)
    twin = ex.fork()
    assert twin.merge_key() == ex.merge_key()
    # drive both copies through the same suffix; all observables must track
    while True:
        runnable = ex.runnable()
        assert runnable == twin.runnable()
        if not runnable:
            break
        pid = runnable[-1]
        ex.perform(pid)
        twin.perform(pid)
        assert _observable(ex) == _observable(twin)
        assert ex.merge_key() == twin.merge_key()


def test_restore_rebuilds_generators_mid_scan():
    cfg = conc_cfg({1: (SCAN,), 2: (UPD(1, 2),)})
    ex = Execution(cfg)
    ex.perform(1)  # scan is mid-operation; generator must be rebuilt in twin
    ex.perform(1)
    snap = ex.snapshot()
    twin = Execution.restore(cfg, snap)
    drain(twin)
    drain(ex)
    assert _observable(ex) == _observable(twin)
    assert ex.results == twin.results


def test_snapshot_requires_recording_off():
    from rwsnap.core import HarnessDefect

    ex = Execution(conc_cfg({1: (SCAN,)}, record=True))
    with pytest.raises(HarnessDefect):
        ex.snapshot()
    with pytest.raises(HarnessDefect):
        Execution(conc_cfg({1: (SCAN,)})).history()


# ---------------------------------------------------------------------------
# Safety rails
# ---------------------------------------------------------------------------


def test_iteration_cap_trips_overflow():
    cfg = conc_cfg({1: (SCAN,), 2: tuple(UPD(1, 1) for _ in range(40))},
                   variant="conc-lf", iteration_cap=3)
    ex = Execution(cfg)
    with pytest.raises(ExplorationOverflow):
        for _ in range(1000):
            ex.perform(1)
            for _ in range(10):  # a full lock-free update per scan step
                if 2 in ex.runnable():
                    ex.perform(2)


def test_read_beyond_capacity_returns_defaults():
    cfg = SimConfig(
        "unbounded", VARIANTS["unbounded"], ("counter",),
        scripts={1: (SCAN,)}, initial_joined=frozenset({1}), capacity=1,
    )
    ex = Execution(cfg)
    assert ex._read_cell("progress", 9) == UNJOINED
    assert ex._read_cell("help", 9) is None
