"""Tests for scenario parsing, digests, overrides, and the bundled files."""

import copy
from pathlib import Path

import pytest

from rwsnap.core import ScenarioError, VARIANTS
from rwsnap.scenario import Scenario, load_scenario, parse_scenario

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


def base_doc():
    return {
        "version": 1,
        "name": "two-counters",
        "variant": "conc-wf",
        "memory": ["counter", "counter"],
        "process": [
            {"id": 1, "ops": [
                {"kind": "update", "entry": 1, "name": "add", "args": [1]},
                {"kind": "scan"},
            ]},
            {"id": 2, "ops": [{"kind": "scan"}]},
        ],
    }


def variant_of(doc, **changes):
    out = copy.deepcopy(doc)
    out.update(changes)
    return out


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def test_parse_happy_path():
    s = parse_scenario(base_doc())
    assert s.name == "two-counters"
    assert s.family == "concurrent"
    assert s.memory == ("counter", "counter")
    assert s.processes[0][0] == 1 and len(s.processes[0][1]) == 2
    assert s.collect_order == "asc" and s.capacity == 0
    assert s.explore_defaults == {
        "mode": "exhaustive", "preemptions": 3, "runs": 1000,
        "seed": 1, "crashes": 0,
    }
    cfg = s.sim_config()
    assert cfg.family == "concurrent"
    assert cfg.rules == VARIANTS["conc-wf"]
    assert cfg.n == 2


def test_parse_unbounded_join_inference():
    doc = variant_of(base_doc(), variant="unbounded", capacity=3)
    doc["process"] = [
        {"id": 1, "ops": [{"kind": "scan"}]},
        {"id": 2, "ops": [{"kind": "join"},
                          {"kind": "update", "entry": 1, "name": "add", "args": [1]}]},
    ]
    s = parse_scenario(doc)
    cfg = s.sim_config()
    # processes without a scripted join start registered
    assert cfg.initial_joined == frozenset({1})
    assert cfg.capacity == 3


@pytest.mark.parametrize("mangle,message", [
    (lambda d: d.update(version=2), "unsupported scenario version"),
    (lambda d: d.update(name=""), "missing scenario name"),
    (lambda d: d.update(variant="turbo"), "unknown variant"),
    (lambda d: d.update(memory=[]), "memory must be"),
    (lambda d: d.update(memory=["counter", "stack"]), "unknown object type"),
    (lambda d: d.update(collect_order="spiral"), "collect order"),
    (lambda d: d.update(capacity=-1), "capacity must be"),
    (lambda d: d.update(process=[]), "at least one"),
    (lambda d: d["process"][0].update(id=0), "id must be a positive integer"),
    (lambda d: d["process"][1].update(id=5), "dense from 1"),
    (lambda d: d["process"][0]["ops"].append({"kind": "levitate"}), "unknown kind"),
    (lambda d: d["process"][0]["ops"].append(
        {"kind": "update", "entry": 9, "name": "add", "args": [1]}), "entry must be in"),
    (lambda d: d["process"][0]["ops"].append(
        {"kind": "update", "entry": 1, "name": "pop", "args": []}), "has no operation"),
    (lambda d: d["process"][0]["ops"].append(
        {"kind": "update", "entry": 1, "name": "add", "args": 3}), "args must be a list"),
    (lambda d: d.update(explore={"mode": "psychic"}), "explore mode"),
    (lambda d: d.update(explore={"runs": -5}), "explore.runs"),
    (lambda d: d["process"][0].update(ops="scan"), "ops must be a list"),
])
def test_parse_rejects_malformed_documents(mangle, message):
    doc = base_doc()
    mangle(doc)
    with pytest.raises(ScenarioError, match=message):
        parse_scenario(doc)


def test_parse_rejects_ill_typed_op_args_eagerly():
    # structurally fine, but the args do not fit the object operation; the
    # eager sim_config() at load time surfaces it
    doc = base_doc()
    doc["process"][0]["ops"][0]["args"] = ["many"]
    with pytest.raises(ScenarioError):
        parse_scenario(doc)


def test_join_only_in_unbounded_family():
    doc = base_doc()
    doc["process"][1]["ops"].insert(0, {"kind": "join"})
    with pytest.raises(ScenarioError):
        parse_scenario(doc)


# ---------------------------------------------------------------------------
# Digests and overrides
# ---------------------------------------------------------------------------


def test_digest_covers_structure_only():
    s = parse_scenario(base_doc())
    # run-mode knobs may change without invalidating recorded schedules
    assert parse_scenario(variant_of(base_doc(), variant="conc-lf")).digest() \
        == s.digest()
    assert parse_scenario(variant_of(base_doc(), collect_order="desc")).digest() \
        == s.digest()
    assert parse_scenario(
        variant_of(base_doc(), explore={"mode": "random", "runs": 7})
    ).digest() == s.digest()
    # structural fields do invalidate
    assert parse_scenario(variant_of(base_doc(), name="other")).digest() != s.digest()
    assert parse_scenario(
        variant_of(base_doc(), memory=["counter", "maxreg"])
    ).digest() != s.digest()
    shuffled = base_doc()
    shuffled["process"][1]["ops"].append({"kind": "scan"})
    assert parse_scenario(shuffled).digest() != s.digest()


def test_with_overrides():
    s = parse_scenario(base_doc())
    assert s.with_overrides().digest() == s.digest()
    lf = s.with_overrides(variant="conc-lf")
    assert lf.variant == "conc-lf" and lf.digest() == s.digest()
    rnd = s.with_overrides(collect_order="random:5")
    assert rnd.collect_order == "random:5"
    with pytest.raises(ScenarioError, match="family"):
        s.with_overrides(variant="solo-wf")
    with pytest.raises(ScenarioError):
        s.with_overrides(collect_order="sideways")


def test_sim_config_applies_mutants():
    s = parse_scenario(base_doc())
    cfg = s.sim_config(mutant="no-help-publish")
    assert not cfg.rules.publish_help
    with pytest.raises(ScenarioError):
        s.sim_config(mutant="no-joiner-guard")  # wrong family
    with pytest.raises(ScenarioError):
        s.sim_config(mutant="nonsense")


# ---------------------------------------------------------------------------
# Bundled scenario files
# ---------------------------------------------------------------------------


def test_load_scenario_errors():
    with pytest.raises(ScenarioError, match="not found"):
        load_scenario(SCENARIO_DIR / "no-such-file.toml")
    bad = SCENARIO_DIR.parent / "pyproject.toml"  # valid TOML, wrong shape
    with pytest.raises(ScenarioError):
        load_scenario(bad)


def test_bundled_scenarios_all_load():
    paths = sorted(SCENARIO_DIR.glob("*.toml"))
    assert len(paths) == 10
    for path in paths:
        s = load_scenario(path)
        cfg = s.sim_config()  # must validate
        assert cfg.n >= 1
        assert isinstance(s, Scenario)


def test_bundled_scenarios_are_digest_stable():
    # loading twice (fresh parse) yields the same digest: scenario identity
    # does not depend on dict ordering or load context
    for path in sorted(SCENARIO_DIR.glob("*.toml")):
        assert load_scenario(path).digest() == load_scenario(path).digest()
