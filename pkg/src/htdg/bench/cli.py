"""``htdg-bench`` command line.

Exit status: 0 when every check passes, 1 on any mismatch or bound
violation, 2 on a usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .corpus import CORPUS
from .harness import corun_throughput, creation_overhead, format_report, run_bench
from .workload import BenchConfig


def _workers(text: str) -> tuple[int, ...]:
    try:
        out = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated counts, got {text!r}") from None
    if not out or any(n < 0 for n in out) or sum(out) < 1:
        raise argparse.ArgumentTypeError("need at least one worker and no negative counts")
    return out


def _gen(text: str) -> str:
    if text in ("random", "chain"):
        return text
    if text.startswith("corpus:") and text.split(":", 1)[1] in CORPUS:
        return text
    known = ", ".join(f"corpus:{k}" for k in sorted(CORPUS))
    raise argparse.ArgumentTypeError(f"unknown generator {text!r}; use random, chain or one of {known}")


def _prob(text: str) -> float:
    p = float(text)
    if not 0.0 <= p <= 1.0:
        raise argparse.ArgumentTypeError("edge probability must lie in [0, 1]")
    return p


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gen", type=_gen, default="random", help="random | chain | corpus:<name>")
    p.add_argument("--nodes", type=_positive, default=1000)
    p.add_argument("--edge-prob", type=_prob, default=0.1)
    p.add_argument("--domains", type=_positive, default=1)
    p.add_argument("--layer-width", type=_positive, default=16)
    p.add_argument("--workers", type=_workers, default=(4,), help="workers per domain, e.g. 4,2")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-steals-mult", type=_positive, default=10)
    p.add_argument("--deviceflow", action="store_true", help="run non-CPU tasks as device flows")
    p.add_argument("--timeout", type=float, default=60.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="htdg-bench", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run workloads on the executor and check them against the oracle")
    _common(run)
    run.add_argument("--reps", type=_positive, default=1)
    run.add_argument("--bound-factor", type=float, default=2.0,
                     help="fail if wasteful steals > factor x tasks x MAX_STEALS (<=0 disables)")
    run.add_argument("--report", help="write key=value report here (default: stdout)")
    run.add_argument("--trace", help="write the instrumented event trace here")
    run.add_argument("--dot", help="write the last graph as DOT here")

    corun = sub.add_parser("corun", help="weighted speedup of concurrent identical workloads")
    _common(corun)
    corun.add_argument("--processes", type=_positive, default=2)

    over = sub.add_parser("overhead", help="amortized task and dependency creation cost")
    over.add_argument("--ops", type=_positive, default=10**6)
    return parser


def _config(args: argparse.Namespace, **extra) -> BenchConfig:
    return BenchConfig(
        generator=args.gen,
        nodes=args.nodes,
        edge_prob=args.edge_prob,
        domains=args.domains,
        layer_width=args.layer_width,
        seed=args.seed,
        workers_per_domain=args.workers,
        max_steals_mult=args.max_steals_mult,
        deviceflow=args.deviceflow,
        timeout=args.timeout,
        **extra,
    )


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "overhead":
        r = creation_overhead(args.ops)
        print(format_report({
            "ops": args.ops,
            "ns_per_task": round(r.seconds_per_task * 1e9, 1),
            "ns_per_edge": round(r.seconds_per_edge * 1e9, 1),
        }), end="")
        return 0

    try:
        if args.command == "corun":
            cfg = _config(args)
            if cfg.generator.startswith("corpus:"):
                parser.error("corun needs the random or chain generator")
            r = corun_throughput(cfg, args.processes)
            report = {
                "processes": r.processes,
                "baseline_seconds": round(r.baseline_seconds, 6),
                "weighted_speedup": round(r.weighted_speedup, 4),
            }
            report.update({f"corun_seconds_{i}": round(t, 6) for i, t in enumerate(r.corun_seconds)})
            print(format_report(report), end="")
            return 0

        bound = args.bound_factor if args.bound_factor > 0 else None
        cfg = _config(args, reps=args.reps, bound_factor=bound,
                      report=args.report, trace=args.trace, dot=args.dot)
    except ValueError as exc:
        parser.error(str(exc))

    result = run_bench(cfg)
    if not args.report:
        print(format_report(result.report()), end="")
    for f in result.failures:
        print(f, file=sys.stderr)
    return 0 if result.passed else 1


if __name__ == "__main__":
    sys.exit(main())
