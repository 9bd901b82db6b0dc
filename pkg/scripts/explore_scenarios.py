#!/usr/bin/env python3
"""Explore every scenario in the scenarios/ directory with its own defaults.

Clean scenarios must come back violation-free; the mutant companions are
run both with their mutant (expecting a violation) and without (expecting
none).  The drop-third-collect companion is exercised through its bundled
schedule instead, since the violating interleaving sits past any cheap
context-switch bound.
"""

import argparse
import sys
import time
from pathlib import Path

from rwsnap.cli import main as cli_main

MUTANT_OF = {
    "mutant_no_help_publish.toml": "no-help-publish",
    "mutant_weak_threshold.toml": "weak-help-threshold",
    "mutant_no_joiner_guard.toml": "no-joiner-guard",
    "mutant_drop_third_collect.toml": "drop-third-collect",
}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--scenarios", type=Path, default=Path("scenarios"))
    args = parser.parse_args()
    failures = []
    for path in sorted(args.scenarios.glob("*.toml")):
        mutant = MUTANT_OF.get(path.name)
        t0 = time.time()
        if mutant == "drop-third-collect":
            schedule = args.scenarios / "schedules" / "drop-third-collect.json"
            rc = cli_main(["replay", str(path), str(schedule)])
            expect = 1
            label = f"replay --mutant {mutant}"
        elif mutant:
            rc = cli_main(["explore", str(path), "--mutant", mutant])
            expect = 1
            label = f"explore --mutant {mutant}"
        else:
            rc = cli_main(["explore", str(path)])
            expect = 0
            label = "explore"
        verdict = "ok" if rc == expect else f"FAIL (exit {rc}, wanted {expect})"
        print(f"[{time.time() - t0:6.2f}s] {path.name}: {label} -> {verdict}")
        if rc != expect:
            failures.append(path.name)
        if mutant and mutant != "drop-third-collect":
            t0 = time.time()
            rc = cli_main(["explore", str(path)])
            verdict = "ok" if rc == 0 else f"FAIL (exit {rc}, wanted 0)"
            print(f"[{time.time() - t0:6.2f}s] {path.name}: explore (no mutant) -> {verdict}")
            if rc != 0:
                failures.append(path.name + " (clean)")
    if failures:
        print("failures:", ", ".join(failures))
        return 1
    print("all scenarios behaved as expected")
    return 0


if __name__ == "__main__":
    sys.exit(main())
