"""Inner-loop comparison: ours vs random multi-start vs genetic algorithm.

    python3 scripts/inner_benchmark.py quality --func schwefel --dim 2 --draws 20
    python3 scripts/inner_benchmark.py cumulative --func levy --dim 10 --iters 20
"""

import argparse
import time

import numpy as np

from tsopt.inner_bench import OPTIMIZERS, cumulative_values, inner_quality


def quality(args):
    t0 = time.perf_counter()
    rows = inner_quality(args.func, args.dim, n_draws=args.draws, ga_budget=args.ga_budget,
                         truth_factor=args.truth_factor)
    print(f"{'optimizer':<10}{'median dist':>14}{'median value':>16}{'median time s':>16}")
    for m in OPTIMIZERS:
        dist = np.median([r.outcomes[m].distance for r in rows])
        val = np.median([r.outcomes[m].value for r in rows])
        sec = np.median([r.outcomes[m].seconds for r in rows])
        print(f"{m:<10}{dist:>14.3e}{val:>16.6f}{sec:>16.3f}")
    print(f"{len(rows)} draws, {time.perf_counter() - t0:.0f} s")


def cumulative(args):
    t0 = time.perf_counter()
    out = cumulative_values(args.func, args.dim, iterations=args.iters, seed=args.seed, ga_budget=args.ga_budget)
    print("iter " + "".join(f"{m:>14}" for m in OPTIMIZERS))
    for k in range(args.iters):
        print(f"{k + 1:>4} " + "".join(f"{out[m][k]:>14.4f}" for m in OPTIMIZERS))
    print("time " + "".join(f"{out[m + '_time'][-1]:>13.1f}s" for m in OPTIMIZERS))
    print(f"{time.perf_counter() - t0:.0f} s total")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="mode", required=True)
    q = sub.add_parser("quality", help="distance to a heavy multi-start oracle on single draws")
    q.add_argument("--func", default="schwefel")
    q.add_argument("--dim", type=int, default=2)
    q.add_argument("--draws", type=int, default=20)
    q.add_argument("--truth-factor", type=int, default=100)
    q.add_argument("--ga-budget", type=int, default=200)
    q.set_defaults(run=quality)
    c = sub.add_parser("cumulative", help="cumulative optimized TS value along one BO run")
    c.add_argument("--func", default="levy")
    c.add_argument("--dim", type=int, default=10)
    c.add_argument("--iters", type=int, default=20)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--ga-budget", type=int, default=200)
    c.set_defaults(run=cumulative)
    args = p.parse_args()
    args.run(args)


if __name__ == "__main__":
    main()
