#!/usr/bin/env python3
"""Step-complexity sweep over the (process count, memory size) grid.

Thin wrapper over ``rwsnap bench``: prints per-cell worst-case scan step
counts, the coefficient that bounds them relative to n^2*m, and the
quiescent solo scan cost.
"""

import sys

from rwsnap.cli import main

if __name__ == "__main__":
    sys.exit(main(["bench", *sys.argv[1:]]))
