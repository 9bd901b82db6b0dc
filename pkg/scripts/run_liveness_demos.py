#!/usr/bin/env python3
"""Drive the progress-property demonstrations and print what each shows.

Four hand-built interleavings, one per progress regime:

* lock-free starvation -- a scan is lapped indefinitely by an updater,
  yet each lap means that updater completed an operation (system-wide
  progress without per-scan progress);
* blocking budget -- the budgeted variant gives up after its iteration
  budget instead of retrying forever;
* wait-free borrow -- the same starvation pattern ends quickly because
  the scan borrows the busy updater's published view;
* adversarial joiners -- crashed mid-update joiners poison iteration
  after iteration, and the scan still terminates through a fresh
  joiner's published view.
"""

import argparse
import sys

from rwsnap.demos import (
    adversarial_joiners_demo,
    blocking_scan_demo,
    starved_lockfree_demo,
    waitfree_borrow_demo,
)


def show(run) -> bool:
    print(f"  {run.name}")
    for key, value in sorted(run.facts.items()):
        print(f"    {key}: {value}")
    ok = not run.facts["violations"]
    print(f"    => {'no correctness violations' if ok else 'VIOLATIONS PRESENT'}")
    return ok


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--updates", type=int, default=12,
                        help="laps to starve the lock-free scan for")
    parser.add_argument("--budget", type=int, default=50,
                        help="iteration budget for the blocking variant")
    args = parser.parse_args()
    ok = True
    print("lock-free scan starved (terminates only when the updater rests):")
    ok &= show(starved_lockfree_demo(updates=args.updates))
    print("blocking scan hits its iteration budget:")
    ok &= show(blocking_scan_demo(budget=args.budget))
    print("wait-free scan escapes the same treatment by borrowing:")
    ok &= show(waitfree_borrow_demo())
    print("unbounded scan survives crashed adversarial joiners:")
    ok &= show(adversarial_joiners_demo())
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
