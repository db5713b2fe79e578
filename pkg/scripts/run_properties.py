#!/usr/bin/env python3
"""Structural property checks on six desk-scale instances; exits nonzero on
any violation. Pass --inject-tie-break-bug to watch the harness catch a
deliberately broken tie break."""

import pathlib
import sys

from aoisched.cli import main

if __name__ == "__main__":
    pathlib.Path("results").mkdir(exist_ok=True)
    sys.exit(main([
        "properties",
        "--out", "results/properties.json",
        *sys.argv[1:],
    ]))
