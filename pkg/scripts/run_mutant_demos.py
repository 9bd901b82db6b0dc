#!/usr/bin/env python3
"""Run every bundled rule-mutation counterexample and its clean contrast.

For each mutant this drives the hand-built interleaving, re-checks the
recorded history with both the linearizability checker and the timeline
oracle, and prints the verdicts side by side: the mutated run must be
rejected, the unmutated contrast must pass.
"""

import argparse
import sys

from rwsnap.checker import check_linearizable, cross_validate, timeline_oracle_check
from rwsnap.demos import MUTANT_CONTRASTS, MUTANT_COUNTEREXAMPLES


def describe(run, expect_violation: bool) -> bool:
    history = run.execution.history()
    history.validate()
    chk = check_linearizable(history)
    orc = timeline_oracle_check(history)
    cross = cross_validate(history)
    inline = run.facts["violations"]
    print(f"  {run.name}")
    print(f"    inline violations : {inline or 'none'}")
    print(f"    checker           : {chk.verdict} ({chk.nodes} nodes)")
    print(f"    oracle            : {orc.verdict}")
    print(f"    checkers agree    : {cross.consistent}")
    print(f"    scan paths        : {run.facts['scan_paths']}")
    bad = bool(inline) or not chk.ok or not orc.ok
    good = bad if expect_violation else not bad
    print(f"    => {'expected' if good else 'UNEXPECTED'} "
          f"({'violation' if bad else 'clean'})")
    return good


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--mutant", choices=sorted(MUTANT_COUNTEREXAMPLES),
                        help="run a single mutant instead of all")
    args = parser.parse_args()
    names = [args.mutant] if args.mutant else sorted(MUTANT_COUNTEREXAMPLES)
    all_ok = True
    for name in names:
        print(f"mutant {name}: counterexample")
        all_ok &= describe(MUTANT_COUNTEREXAMPLES[name](), expect_violation=True)
        contrast = MUTANT_CONTRASTS.get(name)
        if contrast:
            print(f"mutant {name}: contrast (rule restored)")
            all_ok &= describe(contrast(), expect_violation=False)
    print("all demos behaved as expected" if all_ok else "SOME DEMOS MISBEHAVED")
    return 0 if all_ok else 1


if __name__ == "__main__":
    sys.exit(main())
