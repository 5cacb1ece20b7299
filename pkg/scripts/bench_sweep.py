"""Sweep worker counts on one random workload and tabulate steal metrics.

Writes a CSV to stdout: workers, rep, seconds, wasteful steals, tasks.
"""

import argparse
import csv
import sys

from htdg.bench.harness import run_bench
from htdg.bench.workload import BenchConfig


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=5000)
    ap.add_argument("--edge-prob", type=float, default=0.05)
    ap.add_argument("--gen", default="random")
    ap.add_argument("--workers", default="1,2,4,8")
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    out = csv.writer(sys.stdout)
    out.writerow(["workers", "rep", "seconds", "wasteful_steals", "tasks"])
    ok = True
    for w in (int(x) for x in args.workers.split(",")):
        cfg = BenchConfig(generator=args.gen, nodes=args.nodes, edge_prob=args.edge_prob,
                          seed=args.seed, workers_per_domain=(w,), reps=args.reps)
        res = run_bench(cfg)
        ok &= res.passed
        for i, rep in enumerate(res.reps):
            out.writerow([w, i, f"{rep.seconds:.4f}", rep.wasteful_steals, rep.tasks_executed])
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
