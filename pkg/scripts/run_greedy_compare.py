#!/usr/bin/env python3
"""Optimal mixtures of both CSI cases against the greedy baseline at
K=3, p11=0.7, p01=0.3, budgets 0.1..0.6, matched seeds."""

import pathlib
import sys

from aoisched.cli import main

if __name__ == "__main__":
    pathlib.Path("results").mkdir(exist_ok=True)
    sys.exit(main([
        "greedy-compare",
        "--workers", "4",
        "--out", "results/greedy_compare.csv",
        *sys.argv[1:],
    ]))
