"""Monte Carlo cross-check of the Kolmogorov quantiles.

Draws `reps` uniform samples of size n, computes sqrt(n) * D_n for each and
compares empirical quantiles with the bisection values.

    python3 scripts/kolmogorov_mc.py --reps 100000 --n 10000
"""

import argparse
import time

import numpy as np

from drocal.empirical import kolmogorov_quantile


def ks_statistics(n: int, reps: int, seed: int, chunk: int = 500) -> np.ndarray:
    rng = np.random.default_rng(seed)
    i = np.arange(1, n + 1)
    out = np.empty(reps)
    for start in range(0, reps, chunk):
        size = min(chunk, reps - start)
        u = np.sort(rng.random((size, n)), axis=1)
        d = np.maximum((i / n - u).max(axis=1), (u - (i - 1) / n).max(axis=1))
        out[start : start + size] = np.sqrt(n) * d
    return out


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    t0 = time.perf_counter()
    stat = ks_statistics(args.n, args.reps, args.seed)
    for prob in (0.95, 1 - 0.05 / 12):
        emp = np.quantile(stat, prob)
        # binomial standard error of the empirical quantile, via the density estimate
        half = 0.002
        lo, hi = np.quantile(stat, [prob - half, prob + half])
        se = np.sqrt(prob * (1 - prob) / args.reps) * (hi - lo) / (2 * half)
        print(f"p = {prob:.6f}: bisection {kolmogorov_quantile(prob):.5f}, Monte Carlo {emp:.5f} (se ~ {se:.4f})")
    print(f"{args.reps} replications at n = {args.n} in {time.perf_counter() - t0:.0f} s")


if __name__ == "__main__":
    main()
