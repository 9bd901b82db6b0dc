"""Run reports and schedule files: stable JSON artifacts with validation.

Every command writes one ``report.json`` validating against the published
schema (``rwsnap/report_schema.json``), plus any replayable artifacts:
schedule files (exact scheduler choice sequences, bound to the scenario
digest, variant, mutant, and collect order they were produced under) and
recorded histories in line-delimited JSON.
"""

from __future__ import annotations

import json
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import jsonschema

from .core import ScenarioError
from .history import encode_value
from .scenario import Scenario

SCHEDULE_FORMAT = 1


def report_schema() -> dict:
    with resources.files("rwsnap").joinpath("report_schema.json").open("rb") as fh:
        return json.load(fh)


_SCHEMA_CACHE: Optional[dict] = None


def validate_report(report: dict) -> None:
    global _SCHEMA_CACHE
    if _SCHEMA_CACHE is None:
        _SCHEMA_CACHE = report_schema()
    jsonschema.validate(report, _SCHEMA_CACHE)


def make_report(
    command: str,
    scenario: Scenario,
    mutant: Optional[str],
    ok: bool,
    result: dict,
) -> dict:
    report = {
        "tool": "rwsnap",
        "format": 1,
        "command": command,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "ok": ok,
        "scenario": {
            "name": scenario.name,
            "digest": scenario.digest(),
            "variant": scenario.variant,
            "mutant": mutant,
            "collect_order": scenario.collect_order,
        },
        "result": result,
    }
    validate_report(report)
    return report


def jsonable(value: Any) -> Any:
    """Best-effort conversion of report payloads to plain JSON types."""
    return json.loads(json.dumps(encode_value(value), default=repr))


def write_report(report: dict, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "report.json"
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return path


# ---------------------------------------------------------------------------
# Schedule files
# ---------------------------------------------------------------------------


def schedule_doc(
    scenario: Scenario, mutant: Optional[str], tokens
) -> dict:
    return {
        "format": SCHEDULE_FORMAT,
        "kind": "schedule",
        "scenario_name": scenario.name,
        "scenario_digest": scenario.digest(),
        "variant": scenario.variant,
        "mutant": mutant,
        "collect_order": scenario.collect_order,
        "tokens": list(tokens),
    }


def save_schedule(
    scenario: Scenario, mutant: Optional[str], tokens, path: Path
) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(schedule_doc(scenario, mutant, tokens), indent=2, sort_keys=True)
        + "\n"
    )
    return path


def load_schedule(path) -> dict:
    p = Path(path)
    try:
        doc = json.loads(p.read_text())
    except FileNotFoundError:
        raise ScenarioError(f"schedule file not found: {p}")
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{p}: invalid JSON: {exc}")
    if doc.get("kind") != "schedule" or doc.get("format") != SCHEDULE_FORMAT:
        raise ScenarioError(f"{p}: not a format-{SCHEDULE_FORMAT} schedule file")
    if not isinstance(doc.get("tokens"), list):
        raise ScenarioError(f"{p}: missing token list")
    return doc


def check_binding(
    doc: dict, scenario: Scenario, mutant: Optional[str]
) -> list[str]:
    """Mismatches between a schedule file's bindings and the present setup."""
    problems = []
    if doc.get("scenario_digest") != scenario.digest():
        problems.append(
            f"scenario digest mismatch: schedule was recorded against "
            f"{doc.get('scenario_digest', '?')[:12]}…, current scenario is "
            f"{scenario.digest()[:12]}…"
        )
    if doc.get("variant") != scenario.variant:
        problems.append(
            f"variant mismatch: schedule {doc.get('variant')!r} "
            f"vs current {scenario.variant!r}"
        )
    if doc.get("mutant") != mutant:
        problems.append(
            f"mutant mismatch: schedule {doc.get('mutant')!r} vs current {mutant!r}"
        )
    if doc.get("collect_order") != scenario.collect_order:
        problems.append(
            f"collect order mismatch: schedule {doc.get('collect_order')!r} "
            f"vs current {scenario.collect_order!r}"
        )
    return problems
