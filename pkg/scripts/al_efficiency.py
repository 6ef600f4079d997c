"""Label-efficiency experiment: uncertainty sampling vs random sampling.

Prints the per-seed labels needed to reach 95% of the full-data AUC and the
median uncertainty/random ratio.

    python scripts/al_efficiency.py --seeds 1 2 3 --n 1000
"""

import argparse
import json
import time

from loopbench.experiments import al_efficiency


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, nargs="+", default=list(range(1, 11)))
    parser.add_argument("--n", type=int, default=2000)
    parser.add_argument("--defect-rate", type=float, default=0.05)
    parser.add_argument("--out", default=None, help="optional JSON output path")
    args = parser.parse_args()

    start = time.time()
    result = al_efficiency(seeds=args.seeds, n=args.n, defect_rate=args.defect_rate)
    elapsed = time.time() - start

    print(f"{'seed':>5} {'full AUC':>9} {'uncertainty':>12} {'random':>7} {'ratio':>6}")
    for row in result.per_seed:
        print(f"{row['seed']:>5} {row['full_auc']:>9.4f} "
              f"{row['labels_uncertainty']:>12} {row['labels_random']:>7} {row['ratio']:>6.2f}")
    print(f"\nmedian ratio: {result.median_ratio:.3f}  (runtime {elapsed:.0f}s)")

    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump({"per_seed": result.per_seed,
                       "median_ratio": result.median_ratio}, fh, indent=2)
        print(f"written: {args.out}")


if __name__ == "__main__":
    main()
