"""Write a CSV of oscillator outputs at a fixed epistemic value.

    python3 scripts/make_synthetic_data.py out/data.csv --n1 50 --seed 0 --e 1 1 1 1
"""

import argparse

import numpy as np

from drocal.io import write_series_csv
from drocal.model import SyntheticOscillator, sample_uniform


def make_data(n1: int, seed: int, e_true) -> list:
    model = SyntheticOscillator()
    a = sample_uniform(model.a_box, n1, seed)
    return [model.simulate(row, np.asarray(e_true, dtype=float)) for row in a]


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("path")
    p.add_argument("--n1", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--e", type=float, nargs=4, default=[1.0, 1.0, 1.0, 1.0])
    args = p.parse_args()
    write_series_csv(args.path, make_data(args.n1, args.seed, args.e))
    print(f"wrote {args.n1} series to {args.path}")


if __name__ == "__main__":
    main()
