"""Weighted speedup when several executors share the machine."""

import argparse

from htdg.bench.harness import corun_throughput
from htdg.bench.workload import BenchConfig

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--nodes", type=int, default=2000)
ap.add_argument("--workers", type=int, default=2)
ap.add_argument("--max-processes", type=int, default=4)
args = ap.parse_args()

cfg = BenchConfig(nodes=args.nodes, edge_prob=0.05, workers_per_domain=(args.workers,))
for p in range(1, args.max_processes + 1):
    r = corun_throughput(cfg, p)
    print(f"processes={p} baseline={r.baseline_seconds:.3f}s weighted_speedup={r.weighted_speedup:.2f}")
