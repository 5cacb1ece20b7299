"""Device flows: device task graphs, stream capture, and a simulated device.

A device flow describes device-side work as a small DAG of operations. Before
it runs, the DAG is turned into a :class:`StreamSchedule`: ops are levelized,
numbered within their level, and dealt round-robin onto ``max_streams``
streams. Same-stream dependencies rely on stream FIFO order; every
cross-stream dependency gets a record/wait event pair.

There is no real device. :func:`simulate` plays a schedule on integer virtual
time and reports when each op started and completed, which is what the tests
use to check that no dependency is broken.
"""

from __future__ import annotations

import enum
import heapq
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

from .errors import CycleDetected, Deadlock

DEFAULT_MAX_STREAMS = 4


class OpKind(enum.Enum):
    COPY = "copy"
    KERNEL = "kernel"
    OPAQUE = "opaque"


@dataclass(eq=False)
class DeviceOp:
    id: int
    kind: OpKind
    payload: Callable | None
    name: str = ""
    successors: list[int] = field(default_factory=list)
    predecessors: list[int] = field(default_factory=list)

    @property
    def label(self) -> str:
        return self.name or f"op{self.id}"


class DeviceGraph:
    """Explicit device task graph: copies and kernels whose payloads take no
    arguments."""

    def __init__(self):
        self.ops: list[DeviceOp] = []

    def __len__(self) -> int:
        return len(self.ops)

    def _add(self, kind: OpKind, payload, name: str) -> int:
        op = DeviceOp(len(self.ops), kind, payload, name)
        self.ops.append(op)
        return op.id

    def copy(self, payload: Callable | None = None, name: str = "") -> int:
        return self._add(OpKind.COPY, payload, name)

    def kernel(self, payload: Callable | None = None, name: str = "") -> int:
        return self._add(OpKind.KERNEL, payload, name)

    def precede(self, src: int, *dsts: int) -> None:
        for d in dsts:
            if not (0 <= src < len(self.ops) and 0 <= d < len(self.ops)):
                raise IndexError(f"edge {src}->{d} references a missing op")
            if d in self.ops[src].successors:
                continue
            self.ops[src].successors.append(d)
            self.ops[d].predecessors.append(src)

    def succeed(self, dst: int, *srcs: int) -> None:
        for s in srcs:
            self.precede(s, dst)

    def edges(self) -> list[tuple[int, int]]:
        return [(op.id, s) for op in self.ops for s in op.successors]

    def invoke(self, op: DeviceOp, stream: int) -> None:
        if op.payload is not None:
            op.payload()


class CapturedGraph(DeviceGraph):
    """Device graph built by capturing opaque stream calls.

    Every op is opaque: its payload is called with the index of the stream it
    was scheduled on, the way a third-party library call is handed a stream.
    """

    def on(self, payload: Callable[[int], Any], name: str = "") -> int:
        return self._add(OpKind.OPAQUE, payload, name)

    def copy(self, payload: Callable[[int], Any] | None = None, name: str = "") -> int:
        return self.on(payload, name)

    def kernel(self, payload: Callable[[int], Any] | None = None, name: str = "") -> int:
        return self.on(payload, name)

    def invoke(self, op: DeviceOp, stream: int) -> None:
        if op.payload is not None:
            op.payload(stream)


@dataclass
class LevelTable:
    level: list[int]  # per op
    index: list[int]  # position of the op within its level
    levels: list[list[int]]  # ops of each level, in insertion order


def levelize(g: DeviceGraph) -> LevelTable:
    """Longest-path levels (sources at 0), ids dense per level in insertion order."""
    n = len(g.ops)
    indeg = [len(op.predecessors) for op in g.ops]
    level = [0] * n
    ready = deque(i for i in range(n) if indeg[i] == 0)
    seen = 0
    while ready:
        u = ready.popleft()
        seen += 1
        for v in g.ops[u].successors:
            level[v] = max(level[v], level[u] + 1)
            indeg[v] -= 1
            if indeg[v] == 0:
                ready.append(v)
    if seen != n:
        raise CycleDetected(f"device graph has a cycle through {n - seen} ops")
    depth = max(level, default=-1) + 1
    levels: list[list[int]] = [[] for _ in range(depth)]
    index = [0] * n
    for i in range(n):
        index[i] = len(levels[level[i]])
        levels[level[i]].append(i)
    return LevelTable(level, index, levels)


# stream program instructions
WAIT, RUN, RECORD = "wait", "run", "record"


@dataclass
class StreamSchedule:
    max_streams: int
    streams: list[list[int]]  # ops per stream, in issue order
    events: list[tuple[int, int]]  # (recorded after op, waited before op)
    assignment: dict[int, tuple[int, int, int]]  # op -> (level, index, stream)
    programs: list[list[tuple[str, int]]]  # per-stream instruction lists
    labels: list[str]

    def stream_of(self, op: int) -> int:
        return self.assignment[op][2]

    def dump(self) -> str:
        """Byte-stable text form: one ``S<k>:`` line per stream, then sorted
        ``E: rec->wait`` lines."""
        lines = [
            f"S{k}: " + ",".join(self.labels[o] for o in ops)
            for k, ops in enumerate(self.streams)
        ]
        lines += sorted(f"E: {self.labels[p]}->{self.labels[t]}" for p, t in self.events)
        return "\n".join(lines) + "\n"


def make_schedule(g: DeviceGraph, max_streams: int = DEFAULT_MAX_STREAMS) -> StreamSchedule:
    """Greedy round-robin transformation of a device graph into streams."""
    if max_streams < 1:
        raise ValueError("max_streams must be >= 1")
    table = levelize(g)

    def stream(op: int) -> int:
        return table.index[op] % max_streams

    streams: list[list[int]] = [[] for _ in range(max_streams)]
    programs: list[list[tuple[str, int]]] = [[] for _ in range(max_streams)]
    events: list[tuple[int, int]] = []
    assignment: dict[int, tuple[int, int, int]] = {}
    for lvl, ops in enumerate(table.levels):
        for t in ops:
            s = stream(t)
            assignment[t] = (lvl, table.index[t], s)
            for p in g.ops[t].predecessors:
                if stream(p) != s:
                    programs[s].append((WAIT, p))
                    events.append((p, t))
            programs[s].append((RUN, t))
            streams[s].append(t)
            # one event per op, recorded once if any successor is off-stream
            if any(stream(n) != s for n in g.ops[t].successors):
                programs[s].append((RECORD, t))
    while len(streams) > 1 and not streams[-1]:
        streams.pop()
        programs.pop()
    return StreamSchedule(
        max_streams, streams, events, assignment, programs, [op.label for op in g.ops]
    )


@dataclass(frozen=True)
class OpRecord:
    op: int
    stream: int
    start: int
    completion: int  # last tick the op occupies; the stream is free at completion + 1


@dataclass
class SimTrace:
    records: list[OpRecord]  # ordered by completion tick, then stream
    released: dict[int, int]  # event (keyed by recording op) -> release tick
    makespan: int

    def by_op(self) -> dict[int, OpRecord]:
        return {r.op: r for r in self.records}


def simulate(
    sched: StreamSchedule,
    latency: Callable[[int], int] | Mapping[int, int] | None = None,
) -> SimTrace:
    """Run a schedule on a virtual multi-stream device.

    Each stream executes its instruction list in order. A RUN occupies the
    stream for ``latency(op)`` ticks starting at ``start``; a WAIT blocks the
    stream until the named event is released; a RECORD releases the event as
    soon as the stream reaches it, which is right after the op it follows.
    """
    if latency is None:
        lat = lambda op: 1  # noqa: E731
    elif callable(latency):
        lat = latency
    else:
        lat = latency.__getitem__

    nstreams = len(sched.programs)
    pc = [0] * nstreams
    free_at = [0] * nstreams
    released: dict[int, int] = {}
    records: list[OpRecord] = []
    wakeups: list[int] = [0]  # heap of ticks at which some stream frees up
    now = 0
    remaining = sum(len(p) for p in sched.programs)
    while remaining:
        if not wakeups:
            stuck = {
                k: sched.programs[k][pc[k]] for k in range(nstreams) if pc[k] < len(sched.programs[k])
            }
            raise Deadlock(f"streams blocked at {stuck}")
        now = heapq.heappop(wakeups)
        while wakeups and wakeups[0] == now:
            heapq.heappop(wakeups)
        progressed = True
        # records released at `now` can unblock waits on lower-numbered
        # streams, so sweep until nothing moves
        while progressed:
            progressed = False
            for k in range(nstreams):
                prog = sched.programs[k]
                while pc[k] < len(prog) and free_at[k] <= now:
                    kind, op = prog[pc[k]]
                    if kind == WAIT:
                        if released.get(op, now + 1) > now:
                            break
                    elif kind == RUN:
                        d = lat(op)
                        if d < 1:
                            raise ValueError(f"latency of op {op} must be positive, got {d}")
                        free_at[k] = now + d
                        records.append(OpRecord(op, k, now, now + d - 1))
                        heapq.heappush(wakeups, now + d)
                    else:
                        released[op] = now
                    pc[k] += 1
                    remaining -= 1
                    progressed = True
    records.sort(key=lambda r: (r.completion, r.stream))
    makespan = max((r.completion + 1 for r in records), default=0)
    return SimTrace(records, released, makespan)


@dataclass
class DeviceRuntime:
    """Per-domain settings for running device flows."""

    max_streams: int = DEFAULT_MAX_STREAMS
    latency: Callable[[int], int] | None = None


def execute_deviceflow(node, runtime: DeviceRuntime | None = None) -> SimTrace:
    """Build a device-flow task's graph, schedule it, and play it.

    Payloads run in the simulated completion order, so an op's payload always
    observes the side effects of every op it depends on.
    """
    runtime = runtime or DeviceRuntime()
    builder = CapturedGraph() if getattr(node, "capture", False) else DeviceGraph()
    node.work(builder)
    sched = make_schedule(builder, runtime.max_streams)
    trace = simulate(sched, runtime.latency)
    for rec in trace.records:
        builder.invoke(builder.ops[rec.op], rec.stream)
    return trace
