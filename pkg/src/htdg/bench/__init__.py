"""Benchmark and verification harness: workloads, oracle, corpus, CLI."""

from .corpus import CORPUS, CorpusGraph, corpus_graph
from .harness import (
    BenchResult,
    check_workload,
    corun_throughput,
    creation_overhead,
    format_report,
    parse_report,
    run_bench,
)
from .oracle import OracleTrace, sequential_oracle
from .workload import BenchConfig, Workload, gen_chain, gen_random_htdg, structure_hash

__all__ = [
    "CORPUS",
    "BenchConfig",
    "BenchResult",
    "CorpusGraph",
    "OracleTrace",
    "Workload",
    "check_workload",
    "corpus_graph",
    "corun_throughput",
    "creation_overhead",
    "format_report",
    "gen_chain",
    "gen_random_htdg",
    "parse_report",
    "run_bench",
    "sequential_oracle",
    "structure_hash",
]
