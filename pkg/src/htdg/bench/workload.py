"""Benchmark workloads: seeded random layered HTDGs and serial chains.

Every task runs a small integer checksum kernel. A task folds its own seed
with the current results of its strong predecessors and mixes the outcome
into its result slot. The kernel is not idempotent and reads predecessor
results, so a task that runs twice or runs before a predecessor leaves a
different final array than the sequential oracle.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from typing import Sequence

from ..capture import DeviceGraph
from ..graph import TaskGraph

MASK64 = (1 << 64) - 1


def mix64(x: int) -> int:
    """splitmix64 finalizer."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


@dataclass
class BenchConfig:
    generator: str = "random"  # random | chain | corpus:<name>
    nodes: int = 100
    edge_prob: float = 0.1
    domains: int = 1
    domain_ratio: Sequence[float] | None = None  # equal split when None
    layer_width: int = 16
    seed: int = 0
    workers_per_domain: Sequence[int] = (4,)
    reps: int = 1
    max_steals_mult: int = 10
    # run tasks outside domain 0 as three-op device flows instead of plain tasks
    deviceflow: bool = False
    # wasteful steals per run must stay <= factor * tasks * MAX_STEALS; None disables
    bound_factor: float | None = 2.0
    timeout: float = 60.0
    report: str | None = None
    trace: str | None = None
    dot: str | None = None

    def __post_init__(self):
        if self.nodes < 1:
            raise ValueError("nodes must be >= 1")
        if not 0.0 <= self.edge_prob <= 1.0:
            raise ValueError("edge_prob must lie in [0, 1]")
        if self.domains < 1:
            raise ValueError("domains must be >= 1")
        if self.layer_width < 1:
            raise ValueError("layer_width must be >= 1")
        if self.domain_ratio is not None and len(self.domain_ratio) != self.domains:
            raise ValueError("domain_ratio needs one weight per domain")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")


@dataclass
class Workload:
    """A generated graph together with the arrays its payloads write."""

    graph: TaskGraph
    seeds: list[int]
    results: list[int]
    counts: list[int]
    layers: list[list[int]] = field(default_factory=list)

    def reset(self) -> None:
        for i in range(len(self.results)):
            self.results[i] = 0
            self.counts[i] = 0

    def checksum(self) -> int:
        acc = 0
        for r in self.results:
            acc = mix64(acc ^ r)
        return acc


def _kernel(i: int, seeds: list[int], preds: tuple[int, ...], results: list[int], counts: list[int]):
    def run():
        acc = seeds[i]
        for p in preds:
            acc = mix64(acc ^ results[p])
        results[i] = mix64((results[i] * 31 + acc) & MASK64)
        counts[i] += 1

    return run


def _device_kernel(i, seeds, preds, results, counts):
    """Same kernel split over H2D copy -> kernel -> D2H copy device ops."""
    staged = [0]

    def build(dg: DeviceGraph):
        def h2d():
            acc = seeds[i]
            for p in preds:
                acc = mix64(acc ^ results[p])
            staged[0] = acc

        def kernel():
            staged[0] = mix64((results[i] * 31 + staged[0]) & MASK64)

        def d2h():
            results[i] = staged[0]
            counts[i] += 1

        a, k, b = dg.copy(h2d, "h2d"), dg.kernel(kernel, "kernel"), dg.copy(d2h, "d2h")
        dg.precede(a, k)
        dg.precede(k, b)

    return build


def _assign_domains(rng: random.Random, n: int, cfg: BenchConfig) -> list[int]:
    if cfg.domains == 1:
        return [0] * n
    ratio = list(cfg.domain_ratio or [1.0] * cfg.domains)
    total = sum(ratio)
    quotas = [int(n * r / total) for r in ratio]
    # hand the rounding remainder out by largest fractional part
    rest = sorted(range(cfg.domains), key=lambda d: -(n * ratio[d] / total - quotas[d]))
    for d in rest[: n - sum(quotas)]:
        quotas[d] += 1
    doms = [d for d, q in enumerate(quotas) for _ in range(q)]
    rng.shuffle(doms)
    return doms


def _build(n: int, layers: list[list[int]], edges: list[tuple[int, int]], doms: list[int],
           seeds: list[int], cfg: BenchConfig, name: str) -> Workload:
    g = TaskGraph(name, num_domains=cfg.domains)
    results = [0] * n
    counts = [0] * n
    preds: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges:
        preds[v].append(u)
    for i in range(n):
        p = tuple(preds[i])
        if cfg.deviceflow and doms[i] != 0:
            g.deviceflow(_device_kernel(i, seeds, p, results, counts), f"t{i}", domain=doms[i])
        else:
            g.static(_kernel(i, seeds, p, results, counts), f"t{i}", domain=doms[i])
    for u, v in edges:
        g.precede(u, v)
    g.finalize()
    return Workload(g, seeds, results, counts, layers)


def gen_random_htdg(cfg: BenchConfig) -> Workload:
    """Layered random DAG.

    Layer widths are drawn uniformly from ``[1, layer_width]``; every pair of
    nodes in adjacent layers is joined with probability ``edge_prob``. Layer 0
    is all sources, so the graph always has one.
    """
    rng = random.Random(cfg.seed)
    n = cfg.nodes
    layers: list[list[int]] = []
    nid = 0
    while nid < n:
        w = min(rng.randint(1, cfg.layer_width), n - nid)
        layers.append(list(range(nid, nid + w)))
        nid += w
    p = cfg.edge_prob
    edges = []
    for upper, lower in zip(layers, layers[1:]):
        for u in upper:
            for v in lower:
                if rng.random() < p:
                    edges.append((u, v))
    doms = _assign_domains(rng, n, cfg)
    seeds = [rng.getrandbits(64) for _ in range(n)]
    return _build(n, layers, edges, doms, seeds, cfg, f"random-{cfg.seed}")


def gen_chain(cfg: BenchConfig) -> Workload:
    rng = random.Random(cfg.seed)
    n = cfg.nodes
    doms = _assign_domains(rng, n, cfg)
    seeds = [rng.getrandbits(64) for _ in range(n)]
    edges = [(i, i + 1) for i in range(n - 1)]
    return _build(n, [[i] for i in range(n)], edges, doms, seeds, cfg, f"chain-{cfg.seed}")


def structure_hash(g: TaskGraph) -> str:
    """Hash of node kinds, domains and edges; payloads are ignored."""
    h = hashlib.sha256()
    for node in g.nodes:
        h.update(f"{node.id}:{node.kind.value}:{node.domain}:".encode())
        h.update(",".join(map(str, node.successors)).encode())
        h.update(b";")
    return h.hexdigest()
