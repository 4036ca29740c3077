#!/usr/bin/env python3
"""Run the measure and inequality verifications and print the JSON scoreboards.

Usage: python3 scripts/run_verification_suite.py [--out OUT]
"""
import argparse
import sys
from pathlib import Path

from kacbath.cli import main as cli_main

if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("out/verification"))
    args = parser.parse_args()
    code = cli_main(["discretize-sphere", "--out", str(args.out / "sphere"), "--L", "6", "--K", "4"])
    code |= cli_main(["verify-inequalities", "--out", str(args.out / "inequalities")])
    sys.exit(code)
