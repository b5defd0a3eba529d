"""Recompute summary.csv from the trace CSVs in a run directory and compare.

Uses only the standard library so it shares no code with the harness.

    python3 scripts/check_summary.py runs/ [--tol 1e-12]
"""

import argparse
import csv
import glob
import os
import statistics
import sys
from collections import defaultdict

FLOOR = -12.0


def quartiles(values):
    if len(values) == 1:
        return values[0], values[0], values[0]
    q = statistics.quantiles(values, n=4, method="inclusive")
    return q[1], q[0], q[2]


def recompute(run_dir):
    by_key = defaultdict(list)
    for path in sorted(glob.glob(os.path.join(run_dir, "*.csv"))):
        name = os.path.basename(path)
        if name == "summary.csv" or name.endswith("_timing.csv"):
            continue
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                by_key[(row["method"], int(row["iter"]))].append(max(float(row["log10_regret"]), FLOOR))
    return {k: quartiles(v) + (len(v),) for k, v in by_key.items()}


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("run_dir")
    ap.add_argument("--tol", type=float, default=1e-12)
    args = ap.parse_args(argv)
    want = recompute(args.run_dir)
    seen = set()
    worst = 0.0
    with open(os.path.join(args.run_dir, "summary.csv"), newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            key = (row["method"], int(row["iter"]))
            seen.add(key)
            med, q25, q75, n = want[key]
            if int(row["n_runs"]) != n:
                print(f"{key}: n_runs {row['n_runs']} != {n}")
                return 1
            for got, ref in ((row["median"], med), (row["q25"], q25), (row["q75"], q75)):
                worst = max(worst, abs(float(got) - ref))
    if seen != set(want):
        print(f"summary rows {len(seen)} != trace keys {len(want)}")
        return 1
    print(f"{len(seen)} summary rows, max abs difference {worst:.3g}")
    return 0 if worst <= args.tol else 1


if __name__ == "__main__":
    sys.exit(main())
