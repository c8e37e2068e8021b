"""Distance between Levy-area evaluations on coarse interpolations and the
fine-grid reference, with the fitted log2 convergence slope.

Usage: python3 scripts/levy_convergence.py [--out results/levy.csv]
"""

import argparse

from sigpath.experiments import ExperimentConfig, run_config


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="levy-results.csv")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--samples", type=int, default=10000)
    args = ap.parse_args()

    cfg = ExperimentConfig.from_dict(
        {
            "kind": "levy",
            "seed": args.seed,
            "n_samples": args.samples,
            "depths": [4, 5, 6, 7, 8, 9, 10],
            "n_max": 14,
        }
    )
    _, rows = run_config(cfg, out=args.out)
    print(f"wrote {args.out}; slope = {rows[0]['slope']:.4f}")


if __name__ == "__main__":
    main()
