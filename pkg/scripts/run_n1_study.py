"""Eligible fraction against data-set size on the synthetic oscillator.

    python3 scripts/run_n1_study.py --n1 100 --sizes 5 10 20 40 80 --seeds 10
"""

import argparse

import numpy as np

from drocal.eligibility import mean_fraction_by_size, n1_impact_study, summarize_data
from drocal.model import SyntheticOscillator, sample_uniform
from drocal.seeding import derive_seed


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--n1", type=int, default=100)
    p.add_argument("--sizes", type=int, nargs="+", default=[5, 10, 20, 40, 80])
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--n2", type=int, default=50)
    p.add_argument("--k", type=int, default=400)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--jobs", type=int, default=1)
    args = p.parse_args()

    model = SyntheticOscillator()
    a_data = sample_uniform(model.a_box, args.n1, derive_seed(args.seed, 99))
    data = summarize_data([model.simulate(a, np.ones(4)) for a in a_data])
    e = sample_uniform(model.e_box, args.n2, derive_seed(args.seed, 1))
    a = sample_uniform(model.a_box, args.k, derive_seed(args.seed, 2))
    rows = n1_impact_study(data, model, args.sizes, range(args.seeds), e, a, jobs=args.jobs)
    for size, frac in mean_fraction_by_size(rows).items():
        print(f"n1' = {size:4d}: mean eligible fraction {frac:.4f}")


if __name__ == "__main__":
    main()
