#!/usr/bin/env python3
"""Threaded stress run with windowed linearizability checking.

Thin wrapper over ``rwsnap stress`` with defaults sized for a meaningful
soak: 8 threads, 10,000 operations, every window checked.
"""

import sys

from rwsnap.cli import main

if __name__ == "__main__":
    sys.exit(main(["stress", *sys.argv[1:]]))
