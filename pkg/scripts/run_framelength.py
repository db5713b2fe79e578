#!/usr/bin/env python3
"""Average AoI against the frame length K in 2..8 at budget 0.3, both CSI
cases and the three reference channel pairs."""

import pathlib
import sys

from aoisched.cli import main

if __name__ == "__main__":
    pathlib.Path("results").mkdir(exist_ok=True)
    sys.exit(main([
        "framelength",
        "--case", "both",
        "--workers", "4",
        "--out", "results/framelength.csv",
        *sys.argv[1:],
    ]))
