"""Benchmark driver: executor vs oracle, bound checks, reports, microbenchmarks."""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass, field

from ..errors import BoundViolation, ChecksumMismatch, OracleMismatch
from ..executor import Executor, ExecutorConfig, MetricsReport
from ..graph import TaskGraph, TaskKind
from .corpus import corpus_graph
from .oracle import sequential_oracle
from .workload import BenchConfig, Workload, gen_chain, gen_random_htdg, structure_hash

log = logging.getLogger(__name__)


def build_workload(cfg: BenchConfig, seed: int | None = None) -> Workload:
    if seed is not None and seed != cfg.seed:
        cfg = BenchConfig(**{**cfg.__dict__, "seed": seed})
    if cfg.generator == "random":
        return gen_random_htdg(cfg)
    if cfg.generator == "chain":
        return gen_chain(cfg)
    raise ValueError(f"generator {cfg.generator!r} does not produce a checksum workload")


@dataclass
class RepResult:
    seed: int
    nodes: int
    edges: int
    seconds: float
    wasteful_steals: int
    steal_attempts: int
    tasks_executed: int
    failures: list[str] = field(default_factory=list)


@dataclass
class BenchResult:
    config: BenchConfig
    reps: list[RepResult]
    metrics: MetricsReport | None
    failures: list[str]
    trace_lines: list[str] = field(default_factory=list)
    dot: str = ""

    @property
    def passed(self) -> bool:
        return not self.failures

    def report(self) -> dict[str, object]:
        m = self.metrics
        secs = [r.seconds for r in self.reps]
        out: dict[str, object] = {
            "generator": self.config.generator,
            "nodes": self.config.nodes,
            "edge_prob": self.config.edge_prob,
            "domains": self.config.domains,
            "workers": ",".join(map(str, self.config.workers_per_domain)),
            "seed": self.config.seed,
            "reps": len(self.reps),
            "max_steals": m.max_steals if m else 0,
            "steal_attempts_total": m.steal_attempts_total if m else 0,
            "steals_successful": m.steals_successful if m else 0,
            "wasteful_steals": m.wasteful_steals if m else 0,
            "max_wasteful_per_explore": m.max_wasteful_per_explore if m else 0,
            "notifications_sent": m.notifications_sent if m else 0,
            "parks": m.parks if m else 0,
            "tasks_executed": m.tasks_executed if m else 0,
            "max_wasteful_per_run": max((r.wasteful_steals for r in self.reps), default=0),
            "seconds_total": round(sum(secs), 6),
            "seconds_max": round(max(secs, default=0.0), 6),
            "failures": len(self.failures),
            "status": "pass" if self.passed else "fail",
        }
        return out


def format_report(report: dict[str, object]) -> str:
    """``key=value`` lines, keys sorted."""
    return "".join(f"{k}={report[k]}\n" for k in sorted(report))


def parse_report(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        if line.strip():
            k, _, v = line.partition("=")
            out[k] = v
    return out


def check_workload(ex: Executor, wl: Workload, timeout: float = 60.0) -> list[str]:
    """Run ``wl`` on the oracle and on ``ex``; return mismatch descriptions."""
    wl.reset()
    sequential_oracle(wl.graph)
    want_counts = list(wl.counts)
    want_results = list(wl.results)
    wl.reset()
    handle = ex.run(wl.graph)
    if not handle.wait(timeout):
        return [f"hang: run of {wl.graph.name} did not finish within {timeout}s"]
    problems = []
    if wl.counts != want_counts:
        bad = [i for i, (a, b) in enumerate(zip(wl.counts, want_counts)) if a != b]
        problems.append(f"OracleMismatch: {len(bad)} tasks differ in execution count, first {bad[:5]}")
    if wl.results != want_results:
        bad = [i for i, (a, b) in enumerate(zip(wl.results, want_results)) if a != b]
        problems.append(f"ChecksumMismatch: {len(bad)} result slots differ, first {bad[:5]}")
    return problems


def run_bench(cfg: BenchConfig, raise_on_failure: bool = False) -> BenchResult:
    if cfg.generator.startswith("corpus:"):
        return _run_corpus(cfg, raise_on_failure)
    ex_cfg = ExecutorConfig(
        workers_per_domain=_pad_workers(cfg.workers_per_domain, cfg.domains),
        max_steals_multiplier=cfg.max_steals_mult,
        rng_seed=cfg.seed,
        instrument=True,
    )
    reps: list[RepResult] = []
    failures: list[str] = []
    wl = None
    with Executor(ex_cfg) as ex:
        for r in range(cfg.reps):
            seed = cfg.seed + r
            wl = build_workload(cfg, seed)
            before = ex.metrics()
            t0 = time.perf_counter()
            problems = check_workload(ex, wl, cfg.timeout)
            dt = time.perf_counter() - t0
            after = ex.metrics()
            wasteful = after.wasteful_steals - before.wasteful_steals
            executed = after.tasks_executed - before.tasks_executed
            if cfg.bound_factor is not None:
                bound = cfg.bound_factor * len(wl.graph) * ex.max_steals
                if wasteful > bound:
                    problems.append(
                        f"BoundViolation: {wasteful} wasteful steals > {bound:g} "
                        f"({cfg.bound_factor:g} x {len(wl.graph)} tasks x MAX_STEALS {ex.max_steals})"
                    )
            if after.max_wasteful_per_explore > ex.max_steals:
                problems.append("BoundViolation: an explore round exceeded MAX_STEALS attempts")
            problems = [f"seed {seed}: {p}" for p in problems]
            failures.extend(problems)
            reps.append(
                RepResult(seed, len(wl.graph), wl.graph.num_edges, dt, wasteful,
                          after.steal_attempts_total - before.steal_attempts_total, executed, problems)
            )
            log.info("seed %d: %d tasks in %.3fs, %d wasteful steals", seed, len(wl.graph), dt, wasteful)
        metrics = ex.metrics()
        trace = ex.trace_lines() if cfg.trace else []
    result = BenchResult(cfg, reps, metrics, failures, trace, wl.graph.export_dot() if wl else "")
    _write_outputs(cfg, result)
    if raise_on_failure and failures:
        raise _failure_type(failures[0])(failures[0])
    return result


def _run_corpus(cfg: BenchConfig, raise_on_failure: bool) -> BenchResult:
    name = cfg.generator.split(":", 1)[1]
    failures: list[str] = []
    reps: list[RepResult] = []
    cg = corpus_graph(name)
    ndom = max(cfg.domains, cg.graph.num_domains)
    ex_cfg = ExecutorConfig(
        workers_per_domain=_pad_workers(cfg.workers_per_domain, ndom),
        max_steals_multiplier=cfg.max_steals_mult,
        rng_seed=cfg.seed,
        instrument=True,
    )
    with Executor(ex_cfg) as ex:
        for r in range(cfg.reps):
            seed = cfg.seed + r
            cg.reset(seed)
            oracle_trace = sequential_oracle(cg.graph)
            want = sorted(cg.log)
            want_counts = oracle_trace.root_counts(len(cg.graph))
            cg.reset(seed)
            before = ex.metrics()
            t0 = time.perf_counter()
            ok = ex.run(cg.graph).wait(cfg.timeout)
            dt = time.perf_counter() - t0
            after = ex.metrics()
            problems = []
            if not ok:
                problems.append(f"hang: {name} did not finish within {cfg.timeout}s")
            elif sorted(cg.log) != want:
                problems.append(f"OracleMismatch: executed {sorted(cg.log)} but oracle ran {want}")
            problems = [f"seed {seed}: {p}" for p in problems]
            failures.extend(problems)
            reps.append(
                RepResult(seed, len(cg.graph), cg.graph.num_edges, dt,
                          after.wasteful_steals - before.wasteful_steals,
                          after.steal_attempts_total - before.steal_attempts_total,
                          sum(want_counts), problems)
            )
        metrics = ex.metrics()
        trace = ex.trace_lines() if cfg.trace else []
    result = BenchResult(cfg, reps, metrics, failures, trace, cg.graph.export_dot())
    _write_outputs(cfg, result)
    if raise_on_failure and failures:
        raise _failure_type(failures[0])(failures[0])
    return result


def _pad_workers(workers, domains: int) -> tuple[int, ...]:
    workers = tuple(workers)
    if len(workers) >= domains:
        return workers[:domains] if len(workers) > domains else workers
    return workers + (workers[-1],) * (domains - len(workers))


def _failure_type(msg: str):
    if "ChecksumMismatch" in msg:
        return ChecksumMismatch
    if "BoundViolation" in msg:
        return BoundViolation
    return OracleMismatch


def _write_outputs(cfg: BenchConfig, result: BenchResult) -> None:
    if cfg.report:
        with open(cfg.report, "w") as f:
            f.write(format_report(result.report()))
    if cfg.trace:
        with open(cfg.trace, "w") as f:
            f.write("".join(line + "\n" for line in result.trace_lines))
    if cfg.dot:
        with open(cfg.dot, "w") as f:
            f.write(result.dot)


# -- throughput under corun ---------------------------------------------------


@dataclass
class CorunResult:
    processes: int
    baseline_seconds: float
    corun_seconds: list[float]

    @property
    def weighted_speedup(self) -> float:
        return sum(self.baseline_seconds / t for t in self.corun_seconds)


def _timed_run(cfg: BenchConfig, out: list, slot: int, barrier: threading.Barrier | None) -> None:
    wl = build_workload(cfg)
    ex_cfg = ExecutorConfig(
        workers_per_domain=_pad_workers(cfg.workers_per_domain, cfg.domains),
        max_steals_multiplier=cfg.max_steals_mult,
        rng_seed=cfg.seed + slot,
    )
    with Executor(ex_cfg) as ex:
        if barrier is not None:
            barrier.wait()
        t0 = time.perf_counter()
        ex.run(wl.graph).wait(cfg.timeout)
        out[slot] = time.perf_counter() - t0


def corun_throughput(cfg: BenchConfig, processes: int) -> CorunResult:
    """Weighted speedup of ``processes`` identical workloads run side by side.

    Each "process" is a separate executor in this interpreter, so they share
    the GIL as well as the cores.
    """
    if processes < 1:
        raise ValueError("processes must be >= 1")
    solo = [0.0]
    _timed_run(cfg, solo, 0, None)
    times = [0.0] * processes
    barrier = threading.Barrier(processes)
    threads = [
        threading.Thread(target=_timed_run, args=(cfg, times, i, barrier)) for i in range(processes)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    return CorunResult(processes, solo[0], times)


# -- graph creation overhead --------------------------------------------------


@dataclass
class CreationOverhead:
    tasks: int
    edges: int
    seconds_per_task: float
    seconds_per_edge: float


def creation_overhead(n_ops: int = 10**6) -> CreationOverhead:
    """Amortized cost of adding a task and of adding a dependency."""
    g = TaskGraph("overhead")
    add = g.add_task
    static = TaskKind.STATIC
    t0 = time.perf_counter()
    for _ in range(n_ops):
        add(static)
    t_task = time.perf_counter() - t0
    precede = g.precede
    t0 = time.perf_counter()
    for i in range(n_ops - 1):
        precede(i, i + 1)
    t_edge = time.perf_counter() - t0
    n_edges = n_ops - 1
    return CreationOverhead(n_ops, n_edges, t_task / n_ops, t_edge / max(n_edges, 1))


__all__ = [
    "BenchResult",
    "CorunResult",
    "CreationOverhead",
    "RepResult",
    "build_workload",
    "check_workload",
    "corun_throughput",
    "creation_overhead",
    "format_report",
    "parse_report",
    "run_bench",
    "structure_hash",
]
