"""Monte-Carlo estimate of how often the three-coin loop runs its conditions.

    python scripts/condition_loop_montecarlo.py --runs 100000
"""

import argparse
import math

import numpy as np

from htdg.bench.corpus import fig6
from htdg.bench.oracle import sequential_oracle


def first_step_expectation() -> float:
    a = np.array([[0.5, -0.5, 0.0], [-0.5, 1.0, -0.5], [-0.5, 0.0, 1.0]])
    return float(np.linalg.solve(a, np.ones(3))[0])


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=100_000)
    ap.add_argument("--seed0", type=int, default=0)
    args = ap.parse_args()

    cg = fig6()
    counts = np.empty(args.runs)
    for i in range(args.runs):
        cg.reset(args.seed0 + i)
        sequential_oracle(cg.graph)
        counts[i] = cg.state["conditions"]
    half = 1.96 * counts.std(ddof=1) / math.sqrt(args.runs)
    print(f"runs={args.runs}")
    print(f"mean={counts.mean():.4f} ci95=+/-{half:.4f}")
    print(f"first_step={first_step_expectation():.4f}")


if __name__ == "__main__":
    main()
