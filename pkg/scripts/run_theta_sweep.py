#!/usr/bin/env python3
"""Exact probe-family sweep: disturbance and both information rates.

Emits theta-sweep.csv (+ metadata sidecar) in the output directory.
"""
import sys

from orthosim.cli import main

if __name__ == "__main__":
    sys.exit(main(["run", "--builtin", "theta-sweep", *sys.argv[1:]]))
