#!/usr/bin/env python3
"""Monte Carlo falsification of every tail inequality at the standard grid.

Usage: verify_all_tails.py [--trials N]

Exit status is nonzero if any empirical violation rate exceeds
delta + 3 binomial standard errors.
"""

import argparse
import json
from pathlib import Path

from randesign import experiment


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--trials", type=int, default=None)
    args = parser.parse_args()

    with open(Path(__file__).parent / "configs" / "tails_all.json") as fh:
        scenarios = json.load(fh)
    ok = True
    for scenario in scenarios:
        report = experiment.verify_tails(scenario, trials=args.trials)
        ok = ok and report["ok"]
        for row in report["rows"]:
            mark = "ok " if row["pass"] else "VIOLATED"
            print(f"{report['lemma']:>18} delta={row['delta']:<5} "
                  f"rate={row['rate']:.4f} limit={row['threshold']:.4f} {mark}")
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
