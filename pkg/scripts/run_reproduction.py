#!/usr/bin/env python3
"""Run the standard experiment battery through the CLI into one tree.

The default run takes about a minute and emits everything the plotting
package consumes: characteristic maps of the plain cat and the deepest
prepared class, blob-decay series for the plain cat and the three
prepared classes, the five-level lifetime sweep, the error budget, and
the calibration fits.  --full adds the slower optimizer search.
"""

import argparse
import sys
from pathlib import Path

from sqcat.cli import main as sqcat_main


def stage_calls(root: Path, full: bool) -> list[list]:
    calls = [
        ["compress", "--level", "-6", "--out", root / "compress_-6"],
        ["charfun", "--grid=-7:7:181", "--out", root / "charfun_plain"],
        ["charfun", "--label=-6.7", "--grid=-7:7:181",
         "--out", root / "charfun_-6.7"],
        ["decay", "--bootstrap", "100", "--out", root / "decay_plain"],
        ["decay", "--label=-3", "--times", "0:200e-6:21",
         "--bootstrap", "0", "--out", root / "decay_-3"],
        ["decay", "--label=-6.7", "--times", "0:200e-6:21",
         "--bootstrap", "0", "--out", root / "decay_-6.7"],
        ["decay", "--label=-7.6", "--times", "0:200e-6:21",
         "--bootstrap", "0", "--out", root / "decay_-7.6"],
        ["parity", "--label=-6.7", "--shots", "1000",
         "--bootstrap", "0", "--out", root / "parity_-6.7"],
        ["sweep", "--out", root / "sweep"],
        ["budget", "--out", root / "budget"],
        ["calibrate", "--out", root / "calibrate"],
    ]
    if full:
        calls.append(["optimize", "--target-db", "-6",
                      "--out", root / "optimize_-6"])
    return calls


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs",
                        help="root directory for the run tree")
    parser.add_argument("--full", action="store_true",
                        help="also run the optimizer search")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    root = Path(args.out)
    failures = []
    for call in stage_calls(root, args.full):
        argv_strs = [str(part) for part in call]
        argv_strs += ["--seed", str(args.seed)]
        rc = sqcat_main(argv_strs)
        if rc != 0:
            failures.append(argv_strs[0])
    if failures:
        print(f"stages with failures: {failures}", file=sys.stderr)
        return 1
    print(f"all stages ok under {root}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
