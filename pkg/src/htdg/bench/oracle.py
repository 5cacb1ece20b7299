"""Single-worker reference execution of a task graph.

Applies the same scheduling rule as the executor (start from tasks with no
dependencies at all; run a task once its strong dependencies are met; a
condition task jumps straight to the successor it returns) with one FIFO
ready list and no threads. Nested graphs (subflows, modules) are run inline
to completion at the point their task executes.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field

from ..capture import DeviceRuntime, execute_deviceflow
from ..errors import ConditionIndexOutOfRange, NonTermination
from ..graph import Subflow, TaskGraph, TaskKind

DEFAULT_STEP_LIMIT = 10**7

Path = tuple[int, ...]


@dataclass
class OracleTrace:
    # (task path, how many times that task had run before this execution)
    order: list[tuple[Path, int]] = field(default_factory=list)
    counts: Counter = field(default_factory=Counter)

    def count(self, *path: int) -> int:
        return self.counts[tuple(path)]

    def root_counts(self, n: int) -> list[int]:
        return [self.counts[(i,)] for i in range(n)]


class _Budget:
    def __init__(self, limit: int):
        self.left = limit
        self.limit = limit

    def take(self) -> None:
        self.left -= 1
        if self.left < 0:
            raise NonTermination(f"oracle exceeded {self.limit} task executions")


def sequential_oracle(
    graph: TaskGraph,
    step_limit: int = DEFAULT_STEP_LIMIT,
    device: DeviceRuntime | None = None,
) -> OracleTrace:
    trace = OracleTrace()
    _run(graph, (), trace, _Budget(step_limit), device or DeviceRuntime())
    return trace


def _run(graph: TaskGraph, prefix: Path, trace: OracleTrace, budget: _Budget, device) -> None:
    nodes = graph.nodes
    join = [n.strong_dependents for n in nodes]
    ready = deque(n.id for n in nodes if n.is_source)
    while ready:
        nid = ready.popleft()
        node = nodes[nid]
        budget.take()
        path = prefix + (nid,)
        trace.order.append((path, trace.counts[path]))
        trace.counts[path] += 1
        join[nid] = node.strong_dependents
        kind = node.kind
        if kind is TaskKind.CONDITION:
            r = node.work()
            if not isinstance(r, int) or not 0 <= r < len(node.successors):
                raise ConditionIndexOutOfRange(
                    f"condition {node.label} returned {r!r}; it has {len(node.successors)} successors"
                )
            ready.append(node.successors[r])
            continue
        if kind is TaskKind.STATIC:
            if node.work is not None:
                node.work()
        elif kind is TaskKind.SUBFLOW:
            sf = Subflow(node.label, graph.num_domains)
            node.work(sf)
            if sf.nodes:
                _run(sf.finalize(), path, trace, budget, device)
        elif kind is TaskKind.MODULE:
            _run(node.work, path, trace, budget, device)
        elif kind is TaskKind.DEVICEFLOW:
            execute_deviceflow(node, device)
        for s in node.successors:
            join[s] -= 1
            if join[s] == 0:
                ready.append(s)
