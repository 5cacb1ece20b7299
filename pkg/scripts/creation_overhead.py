"""Time task and dependency insertion at a few graph sizes."""

import argparse

from htdg.bench.harness import creation_overhead

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--sizes", type=lambda s: [int(x) for x in s.split(",")], default=[10**4, 10**5, 10**6])
args = ap.parse_args()

print(f"{'ops':>9} {'ns/task':>9} {'ns/edge':>9}")
for n in args.sizes:
    r = creation_overhead(n)
    print(f"{n:>9} {r.seconds_per_task * 1e9:>9.0f} {r.seconds_per_edge * 1e9:>9.0f}")
