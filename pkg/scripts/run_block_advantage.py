#!/usr/bin/env python3
"""Per-pair eavesdropper information: streaming vs permuted blocks.

Emits block-advantage.csv (+ metadata sidecar) in the output directory.
"""
import sys

from orthosim.cli import main

if __name__ == "__main__":
    sys.exit(main(["run", "--builtin", "block-advantage", *sys.argv[1:]]))
