"""Run the split-sample pipeline on the red-wine data over many random splits.

    python scripts/wine_harness.py --splits 100 --selector stepwise

Prints per-split risk intervals and a summary of how often each variable is
selected.
"""

import argparse
from collections import Counter
from pathlib import Path

from agnostic import SelectorSpec, load_csv, run_harness

WINE = Path(__file__).resolve().parents[1] / "data" / "winequality-red.csv"


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--splits", type=int, default=100)
    ap.add_argument("--selector", choices=["stepwise", "lasso"], default="stepwise")
    ap.add_argument("--alpha", type=float, default=0.05)
    args = ap.parse_args()

    data = load_csv(WINE, "Quality")
    counts, below = Counter(), 0
    print("seed\tR_lower\tR_upper\tnull_lower\tnull_upper\tsize")
    for seed in range(args.splits):
        res = run_harness(data, SelectorSpec(args.selector), args.alpha, seed)
        r, r0 = res.risk.risk, res.risk.null_risk
        counts.update(res.model.selected_names)
        below += r.upper < r0.lower
        print(f"{seed}\t{r.lower:.4f}\t{r.upper:.4f}\t{r0.lower:.4f}\t{r0.upper:.4f}\t"
              f"{len(res.model.subset)}")
    print(f"\nselected risk interval below the null interval in {below}/{args.splits} splits")
    for name, k in counts.most_common():
        print(f"{name:24s}{k:4d}")


if __name__ == "__main__":
    main()
