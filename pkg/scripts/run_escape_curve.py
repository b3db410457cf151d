#!/usr/bin/env python3
"""Survival curve of a fully intercepted gbit block vs block length.

Emits escape-curve.csv (+ metadata sidecar) in the output directory;
forwards --trials/--seed/--out to the experiment driver.
"""
import sys

from orthosim.cli import main

if __name__ == "__main__":
    sys.exit(main(["run", "--builtin", "escape-curve", *sys.argv[1:]]))
