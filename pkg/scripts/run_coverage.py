"""Coverage experiment: how often is the true e eligible?

Generates data at e_true, samples n2 - 1 further e's plus e_true itself and
records whether e_true passes, over several seeded replications.

    python3 scripts/run_coverage.py --reps 20 --n1 50 --k 500 --n2 100
"""

import argparse
import time

import numpy as np

from drocal.eligibility import construct_eligibility_set, summarize_data
from drocal.empirical import bonferroni_threshold
from drocal.model import SyntheticOscillator, sample_uniform
from drocal.seeding import derive_seed


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--n1", type=int, default=50)
    p.add_argument("--k", type=int, default=500)
    p.add_argument("--n2", type=int, default=100)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--e-true", type=float, nargs=4, default=[1.0, 1.0, 1.0, 1.0])
    p.add_argument("--jobs", type=int, default=1)
    args = p.parse_args()

    model = SyntheticOscillator()
    e_true = np.array(args.e_true)
    threshold = bonferroni_threshold(args.alpha, 12)
    hits = 0
    t0 = time.perf_counter()
    print("rep  q*(e_true)  eligible  n_eligible")
    for rep in range(args.reps):
        a_data = sample_uniform(model.a_box, args.n1, derive_seed(rep, 99))
        data = summarize_data([model.simulate(a, e_true) for a in a_data])
        e = np.vstack([e_true, sample_uniform(model.e_box, args.n2 - 1, derive_seed(rep, 1))])
        a = sample_uniform(model.a_box, args.k, derive_seed(rep, 2))
        recs = construct_eligibility_set(data, model, e, a, args.alpha, jobs=args.jobs)
        hits += recs[0].eligible
        print(f"{rep:3d}  {recs[0].q_star:10.4f}  {int(recs[0].eligible):8d}  {sum(r.eligible for r in recs):10d}")
    print(f"e_true eligible in {hits}/{args.reps} (threshold {threshold:.4f}); {time.perf_counter() - t0:.0f} s")


if __name__ == "__main__":
    main()
