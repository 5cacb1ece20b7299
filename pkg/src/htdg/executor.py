"""Adaptive multi-domain work-stealing executor.

Every domain (CPU = 0, simulated devices above) has its own workers, its own
shared queue for external submitters, and its own notifier. Each worker owns
one deque *per domain*: it can produce tasks for any domain but only consumes
tasks of its own.

The adaptive rule keeps, per domain, at least one thief alive while any worker
of that domain is active (unless all are active): the last thief to turn
active wakes a sleeping peer to take over stealing. Everyone else parks.

Per-run mutable state (join counters, pending counts) lives in a
``_Topology``; the task graph itself is never written during a run.
"""

from __future__ import annotations

import itertools
import logging
import random
import threading
import time
from dataclasses import dataclass, field
from typing import Sequence

from .atomic import AtomicInt
from .capture import DEFAULT_MAX_STREAMS, DeviceRuntime, execute_deviceflow
from .errors import (
    ConditionIndexOutOfRange,
    ExecutorStopped,
    NotFinalized,
    NotInstrumented,
    SecondConcurrentRun,
    UnknownDomain,
)
from .graph import Subflow, TaskGraph, TaskKind, TaskNode
from .notifier import Notifier
from .wsq import RETRY, WorkDeque

log = logging.getLogger(__name__)

_N_STRIPES = 256  # locks guarding join-counter decrements, keyed by node id


@dataclass
class ExecutorConfig:
    workers_per_domain: Sequence[int] = (4,)
    max_steals_multiplier: int = 10
    # worker w picks victims with random.Random(f"{rng_seed}:{w}")
    rng_seed: int = 0
    instrument: bool = False
    # seconds between (actives, thieves) samples; None disables the sampler
    sample_interval: float | None = None
    max_streams: int = DEFAULT_MAX_STREAMS

    def __post_init__(self):
        self.workers_per_domain = tuple(int(n) for n in self.workers_per_domain)
        if not self.workers_per_domain or any(n < 0 for n in self.workers_per_domain):
            raise ValueError("workers_per_domain must be non-negative counts")
        if sum(self.workers_per_domain) < 1:
            raise ValueError("at least one domain needs a worker")
        if self.max_steals_multiplier < 1:
            raise ValueError("max_steals_multiplier must be >= 1")

    @property
    def num_domains(self) -> int:
        return len(self.workers_per_domain)

    @property
    def num_workers(self) -> int:
        return sum(self.workers_per_domain)

    @property
    def max_steals(self) -> int:
        return self.max_steals_multiplier * self.num_workers


@dataclass
class MetricsReport:
    steal_attempts_total: int
    steals_successful: int
    wasteful_steals: int
    notifications_sent: int
    parks: int
    explore_calls: int
    max_wasteful_per_explore: int
    tasks_executed: int
    max_steals: int
    # domain -> [(monotonic ns, actives, thieves)]
    samples: dict[int, list[tuple[int, int, int]]] = field(default_factory=dict)


class RunHandle:
    """Completion latch for one ``Executor.run``."""

    def __init__(self, graph: TaskGraph):
        self.graph = graph
        self.error: BaseException | None = None
        self.started_ns = time.perf_counter_ns()
        self.finished_ns: int | None = None
        self._done = threading.Event()

    def done(self) -> bool:
        return self._done.is_set()

    def wait(self, timeout: float | None = None) -> bool:
        """Block until the run finishes; re-raise a task's exception.

        Returns False if ``timeout`` expired first.
        """
        if not self._done.wait(timeout):
            return False
        if self.error is not None:
            raise self.error
        return True

    def _finish(self, error: BaseException | None = None) -> None:
        if self._done.is_set():
            return
        if error is not None and self.error is None:
            self.error = error
        self.finished_ns = time.perf_counter_ns()
        self.graph._running = False
        self._done.set()


class _Topology:
    """Runtime state of one execution of one graph (root, subflow or module)."""

    __slots__ = ("id", "graph", "nodes", "join", "pending", "parent", "handle")

    _ids = itertools.count()

    def __init__(self, graph: TaskGraph, handle: RunHandle, parent=None):
        self.id = next(self._ids)
        self.graph = graph
        self.nodes = graph.nodes
        self.join = [n.strong_dependents for n in graph.nodes]
        self.pending = AtomicInt(0)
        # (topology, node) whose completion waits on this one, or
        # (topology, None) for a detached subflow that only holds its parent open
        self.parent = parent
        self.handle = handle


class _Worker:
    __slots__ = (
        "id", "domain", "deques", "rng", "thread",
        "steal_ok", "steal_fail", "parks", "notifies", "explores",
        "max_fail", "executed", "events",
    )

    def __init__(self, wid: int, domain: int, num_domains: int, seed: int):
        self.id = wid
        self.domain = domain
        self.deques = [WorkDeque() for _ in range(num_domains)]
        self.rng = random.Random(f"{seed}:{wid}")
        self.thread: threading.Thread | None = None
        self.steal_ok = self.steal_fail = self.parks = self.notifies = 0
        self.explores = self.max_fail = self.executed = 0
        self.events: list[tuple[int, int, str, str]] = []


class Executor:
    """Runs finalized task graphs on per-domain worker pools.

    >>> g = TaskGraph()
    >>> a, b = g.emplace(lambda: None, lambda: None)
    >>> g.precede(a, b)
    >>> with Executor(ExecutorConfig((2,))) as ex:
    ...     ex.run(g.finalize()).wait()
    True
    """

    def __init__(self, config: ExecutorConfig | None = None, **kwargs):
        self.config = config or ExecutorConfig(**kwargs)
        cfg = self.config
        nd = cfg.num_domains
        self._max_steals = cfg.max_steals
        self._instrument = cfg.instrument
        self._actives = [AtomicInt(0) for _ in range(nd)]
        self._thieves = [AtomicInt(0) for _ in range(nd)]
        self._shared = [WorkDeque() for _ in range(nd)]
        self._queue_lock = threading.Lock()
        self._run_lock = threading.Lock()
        self._stripes = [threading.Lock() for _ in range(_N_STRIPES)]
        self._device = [DeviceRuntime(cfg.max_streams) for _ in range(nd)]
        self._stop = False
        self._handles: set[RunHandle] = set()
        self._ext_notifies = 0
        self._ext_events: list[tuple[int, int, str, str]] = []
        self._samples: dict[int, list[tuple[int, int, int]]] = {d: [] for d in range(nd)}

        self._workers: list[_Worker] = []
        for d, n in enumerate(cfg.workers_per_domain):
            for _ in range(n):
                self._workers.append(_Worker(len(self._workers), d, nd, cfg.rng_seed))
        self._domain_workers = [[w for w in self._workers if w.domain == d] for d in range(nd)]
        # notifier waiter ids are positions within the domain's worker list
        self._slot = {w.id: i for d in range(nd) for i, w in enumerate(self._domain_workers[d])}
        self._notifiers = [Notifier(max(len(ws), 1)) for ws in self._domain_workers]
        # steal victims of domain d: every worker's domain-d deque, then the shared queue
        self._victims = [[w.deques[d] for w in self._workers] + [self._shared[d]] for d in range(nd)]

        for w in self._workers:
            w.thread = threading.Thread(
                target=self._worker_loop, args=(w,), name=f"htdg-w{w.id}-d{w.domain}", daemon=True
            )
            w.thread.start()
        self._sampler = None
        if self._instrument and cfg.sample_interval:
            self._sampler = threading.Thread(target=self._sample_loop, name="htdg-sampler", daemon=True)
            self._sampler.start()

    # -- lifecycle --------------------------------------------------------

    @property
    def num_domains(self) -> int:
        return self.config.num_domains

    @property
    def num_workers(self) -> int:
        return len(self._workers)

    @property
    def max_steals(self) -> int:
        return self._max_steals

    @property
    def stopped(self) -> bool:
        return self._stop

    def device_runtime(self, domain: int) -> DeviceRuntime:
        return self._device[domain]

    def __enter__(self) -> "Executor":
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown()

    def wait_for_all(self, timeout: float | None = None) -> bool:
        deadline = None if timeout is None else time.monotonic() + timeout
        while True:
            with self._run_lock:
                pending = [h for h in self._handles if not h.done()]
            if not pending:
                return True
            left = None if deadline is None else deadline - time.monotonic()
            if left is not None and left <= 0:
                return False
            pending[0]._done.wait(left)

    def shutdown(self, wait: bool = True, timeout: float | None = None) -> None:
        """Finish in-flight runs (if ``wait``), then stop and join the workers."""
        if wait and not self._stop:
            self.wait_for_all(timeout)
        self._set_stop()
        for w in self._workers:
            w.thread.join(timeout)
        if self._sampler is not None:
            self._sampler.join(timeout)

    def _set_stop(self) -> None:
        self._stop = True
        for n in self._notifiers:
            n.notify_all()

    # -- submission (Alg. 8) ----------------------------------------------

    def run(self, graph: TaskGraph) -> RunHandle:
        if not graph.finalized:
            raise NotFinalized(f"graph {graph.name!r} must be finalized before it can run")
        if self._stop:
            raise ExecutorStopped("executor has been stopped")
        self._check_domains(graph)
        handle = RunHandle(graph)
        with self._run_lock:
            if graph._running:
                raise SecondConcurrentRun(f"graph {graph.name!r} is already running")
            graph._running = True
            self._handles = {h for h in self._handles if not h.done()}
            self._handles.add(handle)
        topo = _Topology(graph, handle)
        sources = [n for n in graph.nodes if n.is_source]
        if not sources:
            handle._finish()
            return handle
        topo.pending.store(len(sources))
        for node in sources:
            d = node.domain
            with self._queue_lock:
                self._shared[d].push((topo, node))
                if self._instrument:
                    self._ext_event("SUBMIT", f"{topo.id}.{node.id}:{d}")
                    self._ext_event("NOTIFY", f"{d}:one")
                self._ext_notifies += 1
                self._notifiers[d].notify_one()
        return handle

    def _check_domains(self, graph: TaskGraph, seen=None) -> None:
        seen = seen if seen is not None else set()
        if id(graph) in seen:
            return
        seen.add(id(graph))
        for n in graph.nodes:
            if n.domain >= self.num_domains or not self._domain_workers[n.domain]:
                raise UnknownDomain(f"task {n.label} targets domain {n.domain} which has no workers")
            if n.kind is TaskKind.MODULE:
                self._check_domains(n.work, seen)

    # -- worker side (Alg. 2-7) -------------------------------------------

    def _worker_loop(self, w: _Worker) -> None:
        t = None
        while True:
            self._exploit_task(w, t)
            ok, t = self._wait_for_task(w)
            if not ok:
                break

    def _exploit_task(self, w: _Worker, t) -> None:
        if t is None:
            return
        d = w.domain
        # actives first, then thieves: the order pairs with the last-thief
        # checks in _wait_for_task
        active = self._actives[d].inc()
        thieves = self._thieves[d].value
        if self._instrument:
            self._event(w, "ACTIVE_INC", f"{d}:{active}:{thieves}")
        if active == 1 and thieves == 0:
            self._notify(w, d)
        q = w.deques[d]
        while t is not None:
            if self._stop:
                break
            self._execute_task(w, t)
            t = q.pop()
        left = self._actives[d].dec()
        if self._instrument:
            self._event(w, "ACTIVE_DEC", f"{d}:{left}")

    def _execute_task(self, w: _Worker, t) -> None:
        topo, node = t
        if self._instrument:
            self._event(w, "EXEC", f"{topo.id}.{node.id}")
        w.executed += 1
        # re-arm for the next visit through a condition back edge
        topo.join[node.id] = node.strong_dependents
        try:
            kind = node.kind
            if kind is TaskKind.STATIC:
                if node.work is not None:
                    node.work()
            elif kind is TaskKind.CONDITION:
                r = node.work()
                succ = node.successors
                if not isinstance(r, int) or not 0 <= r < len(succ):
                    raise ConditionIndexOutOfRange(
                        f"condition {node.label} returned {r!r}; it has {len(succ)} successors"
                    )
                self._submit_task(w, topo, topo.nodes[succ[r]])
                self._retire(w, topo)
                return
            elif kind is TaskKind.SUBFLOW:
                sf = Subflow(node.label, topo.graph.num_domains)
                node.work(sf)
                if sf.nodes:
                    sf.finalize()
                    self._check_domains(sf)
                    if sf.joined:
                        self._spawn(w, sf, topo, node)
                        return
                    topo.pending.inc()
                    self._spawn(w, sf, topo, None)
            elif kind is TaskKind.MODULE:
                if node.work.nodes:
                    self._spawn(w, node.work, topo, node)
                    return
            elif kind is TaskKind.DEVICEFLOW:
                execute_deviceflow(node, self._device[node.domain])
        except Exception as exc:  # noqa: BLE001 - user code
            self._fail(topo.handle, exc)
            return
        self._complete(w, topo, node)

    def _spawn(self, w: _Worker, graph: TaskGraph, topo: _Topology, node: TaskNode | None) -> None:
        child = _Topology(graph, topo.handle, parent=(topo, node))
        sources = [n for n in graph.nodes if n.is_source]
        # count every source up front so an early finisher cannot drive
        # pending to zero while the rest are still being pushed
        child.pending.store(len(sources))
        for n in sources:
            self._push_task(w, child, n)

    def _complete(self, w: _Worker, topo: _Topology, node: TaskNode) -> None:
        join = topo.join
        nodes = topo.nodes
        stripes = self._stripes
        for s in node.successors:
            with stripes[s & (_N_STRIPES - 1)]:
                left = join[s] - 1
                join[s] = left
            if left == 0:
                self._submit_task(w, topo, nodes[s])
        self._retire(w, topo)

    def _retire(self, w: _Worker, topo: _Topology) -> None:
        while topo.pending.dec() == 0:
            parent = topo.parent
            if parent is None:
                topo.handle._finish()
                return
            ptopo, pnode = parent
            if pnode is not None:
                self._complete(w, ptopo, pnode)
                return
            topo = ptopo  # detached subflow: release the hold on its parent

    def _submit_task(self, w: _Worker, topo: _Topology, node: TaskNode) -> None:
        topo.pending.inc()
        self._push_task(w, topo, node)

    def _push_task(self, w: _Worker, topo: _Topology, node: TaskNode) -> None:
        d = node.domain
        w.deques[d].push((topo, node))
        if self._instrument:
            self._event(w, "SUBMIT", f"{topo.id}.{node.id}:{d}")
        if d != w.domain and self._actives[d].value == 0 and self._thieves[d].value == 0:
            self._notify(w, d)

    def _wait_for_task(self, w: _Worker):
        d = w.domain
        thieves = self._thieves[d]
        notifier = self._notifiers[d]
        slot = self._slot[w.id]
        shared = self._shared[d]
        thieves.inc()
        while True:
            t = self._explore_task(w)
            if t is not None:
                if thieves.dec() == 0:
                    self._notify(w, d)
                return True, t
            notifier.prepare_wait(slot)
            if not shared.empty():
                notifier.cancel_wait(slot)
                t = shared.steal()
                if t is not None and t is not RETRY:
                    if thieves.dec() == 0:
                        self._notify(w, d)
                    return True, t
                continue  # still a thief; explore again without re-counting
            if self._stop:
                notifier.cancel_wait(slot)
                for dd in range(self.num_domains):
                    self._notify(w, dd, all=True)
                thieves.dec()
                return False, None
            if thieves.dec() == 0:
                if self._actives[d].value > 0 or any(not x.deques[d].empty() for x in self._workers):
                    notifier.cancel_wait(slot)
                    thieves.inc()  # back to being a thief
                    continue
            if self._instrument:
                self._event(w, "PARK", str(d))
            w.parks += 1
            notifier.commit_wait(slot)
            if self._instrument:
                self._event(w, "UNPARK", str(d))
            return True, None

    def _explore_task(self, w: _Worker):
        victims = self._victims[w.domain]
        nv = len(victims)
        rand = w.rng.randrange
        instrument = self._instrument
        w.explores += 1
        failed = 0
        for _ in range(self._max_steals):
            time.sleep(0)  # yield the GIL and the core
            v = rand(nv)
            t = victims[v].steal()
            if t is not None and t is not RETRY:
                w.steal_ok += 1
                if instrument:
                    self._event(w, "STEAL_OK", _victim_name(v, nv))
                break
            failed += 1
            if instrument:
                self._event(w, "STEAL_FAIL", _victim_name(v, nv))
        else:
            t = None
        w.steal_fail += failed
        if failed > w.max_fail:
            w.max_fail = failed
        return t

    def _notify(self, w: _Worker, d: int, all: bool = False) -> None:
        w.notifies += 1
        if self._instrument:
            self._event(w, "NOTIFY", f"{d}:{'all' if all else 'one'}")
        self._notifiers[d].notify(all)

    def _fail(self, handle: RunHandle, exc: BaseException) -> None:
        log.debug("task raised, stopping executor: %r", exc)
        handle._finish(exc)
        self._set_stop()
        with self._run_lock:
            others = [h for h in self._handles if h is not handle]
        for h in others:
            h._finish(ExecutorStopped("executor stopped after a task failure in another run"))

    # -- instrumentation --------------------------------------------------

    def _event(self, w: _Worker, name: str, arg: str) -> None:
        w.events.append((time.perf_counter_ns(), w.id, name, arg))

    def _ext_event(self, name: str, arg: str) -> None:
        self._ext_events.append((time.perf_counter_ns(), -1, name, arg))

    def _sample_loop(self) -> None:
        interval = self.config.sample_interval
        while not self._stop:
            time.sleep(interval)
            now = time.perf_counter_ns()
            for d in range(self.num_domains):
                self._samples[d].append((now, self._actives[d].value, self._thieves[d].value))

    def counters(self) -> tuple[list[int], list[int]]:
        """Current (actives, thieves) per domain."""
        return [a.value for a in self._actives], [t.value for t in self._thieves]

    def metrics(self) -> MetricsReport:
        if not self._instrument:
            raise NotInstrumented("construct the executor with instrument=True")
        ws = self._workers
        ok = sum(w.steal_ok for w in ws)
        fail = sum(w.steal_fail for w in ws)
        return MetricsReport(
            steal_attempts_total=ok + fail,
            steals_successful=ok,
            wasteful_steals=fail,
            notifications_sent=sum(w.notifies for w in ws) + self._ext_notifies,
            parks=sum(w.parks for w in ws),
            explore_calls=sum(w.explores for w in ws),
            max_wasteful_per_explore=max((w.max_fail for w in ws), default=0),
            tasks_executed=sum(w.executed for w in ws),
            max_steals=self._max_steals,
            samples={d: list(s) for d, s in self._samples.items()},
        )

    def trace_events(self) -> list[tuple[int, int, str, str]]:
        """All recorded events, ordered by timestamp (stable per worker)."""
        if not self._instrument:
            raise NotInstrumented("construct the executor with instrument=True")
        streams = [list(w.events) for w in self._workers] + [list(self._ext_events)]
        return sorted((e for s in streams for e in s), key=lambda e: e[0])

    def worker_events(self, wid: int) -> list[tuple[int, int, str, str]]:
        if not self._instrument:
            raise NotInstrumented("construct the executor with instrument=True")
        return list(self._workers[wid].events) if wid >= 0 else list(self._ext_events)

    def trace_lines(self) -> list[str]:
        return [f"{ns} {wid} {name} {arg}" for ns, wid, name, arg in self.trace_events()]

    def clear_trace(self) -> None:
        for w in self._workers:
            w.events.clear()
        self._ext_events.clear()
        for s in self._samples.values():
            s.clear()


def _victim_name(v: int, nv: int) -> str:
    return "shared" if v == nv - 1 else str(v)


def parse_trace_line(line: str) -> tuple[int, int, str, str]:
    ns, wid, name, arg = line.split(" ", 3)
    return int(ns), int(wid), name, arg
