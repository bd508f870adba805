"""Spectral commute times against the random-walk oracle on seeded random graphs."""

import argparse
import time

import numpy as np

from commute_embed.pipeline import oracle_check


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--graphs", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    start = time.perf_counter()
    rows = np.array(oracle_check(args.graphs, args.seed))
    elapsed = time.perf_counter() - start
    print(f"{args.graphs} graphs, N in [{rows[:, 0].min():.0f}, {rows[:, 0].max():.0f}], {elapsed:.2f} s")
    print(f"max relative error   {rows[:, 1].max():.3e}")
    print(f"median relative err  {np.median(rows[:, 1]):.3e}")
    print(f"max one-step resid   {rows[:, 2].max():.3e}")


if __name__ == "__main__":
    main()
