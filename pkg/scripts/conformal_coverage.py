"""Monte Carlo coverage and mean length of full conformal intervals.

    python scripts/conformal_coverage.py --reps 2000 --n 50 --alpha 0.1
"""

import argparse

import numpy as np

from agnostic import Dataset, GridSpec, PredictorSpec, conformal_interval


def linear_normal(rng, n):
    x = rng.standard_normal((n, 3))
    return x, x @ [1.0, -0.5, 0.0] + rng.standard_normal(n)


def heavy_tailed(rng, n):
    x = rng.standard_normal((n, 3))
    return x, x @ [1.0, -0.5, 0.0] + rng.standard_t(2, size=n)


def sine(rng, n):
    x = rng.uniform(-2, 2, size=(n, 1))
    return x, np.sin(2 * x[:, 0]) + 0.3 * rng.standard_normal(n)


DGPS = {"linear-normal": linear_normal, "heavy-tailed": heavy_tailed, "sine": sine}


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--reps", type=int, default=2000)
    ap.add_argument("--n", type=int, default=50)
    ap.add_argument("--alpha", type=float, default=0.1)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print("dgp\tcoverage\tse\tmean_length")
    for name, dgp in DGPS.items():
        rng = np.random.default_rng(args.seed)
        hits, lengths = 0, []
        for _ in range(args.reps):
            x, y = dgp(rng, args.n + 1)
            names = [f"x{j}" for j in range(x.shape[1])]
            res = conformal_interval(Dataset(x[:-1], y[:-1], names), x[-1], args.alpha,
                                     PredictorSpec(), GridSpec(points=400))
            hits += res.contains(y[-1])
            lengths.append(res.length)
        cov = hits / args.reps
        print(f"{name}\t{cov:.4f}\t{np.sqrt(cov * (1 - cov) / args.reps):.4f}\t"
              f"{np.mean(lengths):.3f}")


if __name__ == "__main__":
    main()
