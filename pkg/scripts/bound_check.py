"""Empirical violation rate of the l1-ball excess-risk bound across p and n.

    python scripts/bound_check.py --reps 500 --dgp bounded-sign
"""

import argparse

from agnostic import BoundInputs, verify_bound
from agnostic.riskbound import DGPS


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--reps", type=int, default=500)
    ap.add_argument("--dgp", choices=sorted(DGPS), default="bounded-sign")
    ap.add_argument("--delta", type=float, default=0.1)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print("n\tp\tbound\tviolation_rate\tmean_excess\tmax_excess")
    for n in (50, 100, 400):
        for p in (5, 50):
            r = verify_bound(args.dgp, BoundInputs(1.0, 1.0, n, p, args.delta), args.reps,
                             args.seed)
            print(f"{n}\t{p}\t{r.bound_value:.4f}\t{r.violation_rate:.3f}\t"
                  f"{r.mean_excess:.4f}\t{r.max_excess:.4f}")


if __name__ == "__main__":
    main()
