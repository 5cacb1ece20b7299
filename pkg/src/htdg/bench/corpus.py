"""Built-in corpus of small canonical graphs.

Each builder returns a :class:`CorpusGraph`: the finalized graph plus a shared
``log`` that every task appends its name to, so tests and the CLI can check
execution order and counts.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Any, Callable

from ..capture import CapturedGraph, DeviceGraph
from ..graph import Subflow, TaskGraph


@dataclass
class CorpusGraph:
    graph: TaskGraph
    log: list[str]
    ids: dict[str, int]
    state: dict[str, Any] = field(default_factory=dict)
    # restore the closures' mutable state before another run; graphs with
    # random control flow reseed from the argument
    reset: Callable[..., None] = lambda seed=None: None

    def count(self, name: str) -> int:
        return self.log.count(name)


def _clearer(log: list[str]):
    def reset(seed: int | None = None) -> None:
        log.clear()

    return reset


def _rec(log: list[str], name: str, fn: Callable | None = None):
    def task(*args):
        log.append(name)
        if fn is not None:
            return fn(*args)

    return task


def listing1() -> CorpusGraph:
    """A before B and C; D after B and C."""
    log: list[str] = []
    g = TaskGraph("listing1")
    ids = {n: g.static(_rec(log, n), n) for n in "ABCD"}
    g.precede(ids["A"], ids["B"], ids["C"])
    g.succeed(ids["D"], ids["B"], ids["C"])
    return CorpusGraph(g.finalize(), log, ids, reset=_clearer(log))


def listing2(detach: bool = False) -> CorpusGraph:
    """B spawns B1, B2 -> B3 at run time; joined before D by default."""
    log: list[str] = []
    g = TaskGraph("listing2")
    ids = {n: g.static(_rec(log, n), n) for n in "ACD"}

    def spawn(sf: Subflow):
        log.append("B")
        b1, b2, b3 = (sf.static(_rec(log, n), n) for n in ("B1", "B2", "B3"))
        sf.succeed(b3, b1, b2)
        if detach:
            sf.detach()

    ids["B"] = g.subflow(spawn, "B")
    g.precede(ids["A"], ids["B"], ids["C"])
    g.succeed(ids["D"], ids["B"], ids["C"])
    return CorpusGraph(g.finalize(), log, ids, reset=_clearer(log))


def listing3() -> CorpusGraph:
    """C -> D (subflow D1 -> D2) -> E, where E is a module over A -> B."""
    log: list[str] = []
    inner = TaskGraph("taskflow1")
    a, b = inner.static(_rec(log, "A"), "A"), inner.static(_rec(log, "B"), "B")
    inner.precede(a, b)
    inner.finalize()

    g = TaskGraph("taskflow2")
    c = g.static(_rec(log, "C"), "C")

    def spawn(sf: Subflow):
        log.append("D")
        d1, d2 = sf.static(_rec(log, "D1"), "D1"), sf.static(_rec(log, "D2"), "D2")
        sf.precede(d1, d2)

    d = g.subflow(spawn, "D")
    e = g.compose(inner, "E")
    g.precede(d, e)
    g.precede(c, d)
    return CorpusGraph(g.finalize(), log, {"C": c, "D": d, "E": e}, {"inner": inner}, reset=_clearer(log))


def if_else(branch: int = 0) -> CorpusGraph:
    log: list[str] = []
    g = TaskGraph("if-else")
    init = g.static(_rec(log, "init"), "init")
    cond = g.condition(_rec(log, "cond", lambda: branch), "cond")
    yes, no = g.static(_rec(log, "yes"), "yes"), g.static(_rec(log, "no"), "no")
    g.succeed(cond, init)
    g.precede(cond, yes, no)
    return CorpusGraph(g.finalize(), log, dict(init=init, cond=cond, yes=yes, no=no), reset=_clearer(log))


def listing4(iterations: int = 100) -> CorpusGraph:
    """do-while: body runs, cond loops back while i < iterations."""
    log: list[str] = []
    state = {"i": 0}

    def init():
        state["i"] = 0

    def body():
        state["i"] += 1

    def cond():
        return 0 if state["i"] < iterations else 1

    g = TaskGraph("listing4")
    ids = {
        "init": g.static(_rec(log, "init", init), "init"),
        "body": g.static(_rec(log, "body", body), "body"),
        "cond": g.condition(_rec(log, "cond", cond), "cond"),
        "done": g.static(_rec(log, "done"), "done"),
    }
    g.precede(ids["init"], ids["body"])
    g.precede(ids["body"], ids["cond"])
    g.precede(ids["cond"], ids["body"], ids["done"])
    return CorpusGraph(g.finalize(), log, ids, state, reset=_clearer(log))


def fig6(seed: int = 0) -> CorpusGraph:
    """init -> F1; each Fi moves on with probability 1/2 or loops back to F1."""
    log: list[str] = []
    rng = random.Random(seed)
    state = {"rng": rng, "conditions": 0}

    def coin():
        state["conditions"] += 1
        return state["rng"].randrange(2)

    g = TaskGraph("fig6")
    init = g.static(_rec(log, "init"), "init")
    f1, f2, f3 = (g.condition(_rec(log, n, coin), n) for n in ("F1", "F2", "F3"))
    stop = g.static(_rec(log, "stop"), "stop")
    g.precede(init, f1)
    g.precede(f1, f2, f1)
    g.precede(f2, f3, f1)
    g.precede(f3, stop, f1)

    def reset(new_seed: int | None = None):
        log.clear()
        state["conditions"] = 0
        if new_seed is not None:
            state["rng"].seed(new_seed)

    cg = CorpusGraph(g.finalize(), log, dict(init=init, F1=f1, F2=f2, F3=f3, stop=stop), state)
    cg.reset = reset
    return cg


def fig9_no_source() -> TaskGraph:
    """Every task has an incoming edge, so nothing can start."""
    g = TaskGraph("fig9-left")
    a = g.static(name="A")
    c = g.condition(lambda: 0, "C")
    b = g.static(name="B")
    g.precede(a, c)
    g.precede(c, b, a)
    g.precede(b, a)
    return g


def fig9_race(fixed: bool = False) -> TaskGraph:
    """C weakly and E strongly reach D; D may run twice. ``fixed`` inserts X."""
    g = TaskGraph("fig9-right")
    s = g.static(name="S")
    c = g.condition(lambda: 0, "C")
    e = g.static(name="E")
    d = g.static(name="D")
    f = g.static(name="F")
    g.precede(s, c, e)
    if fixed:
        x = g.static(name="X")
        g.precede(c, x, f)
        g.precede(x, d)
    else:
        g.precede(c, d, f)
    g.precede(e, d)
    return g


def saxpy(capture: bool = False) -> CorpusGraph:
    """Two CPU allocations, then a device flow: 2 H2D copies -> kernel -> 2 D2H copies."""
    log: list[str] = []
    n = 8
    host = {"x": [1] * n, "y": [2] * n}
    dev: dict[str, list[int]] = {}

    def flow(fg: DeviceGraph):
        def h2d(key):
            def op(*stream):
                log.append(f"h2d_{key}")
                dev[key] = list(host[key])
            return op

        def d2h(key):
            def op(*stream):
                log.append(f"d2h_{key}")
                host[key] = list(dev[key])
            return op

        def kernel(*stream):
            log.append("kernel")
            # y = 2 * x + y, needs both inputs on the device
            dev["y"] = [2 * a + b for a, b in zip(dev["x"], dev["y"])]

        hx, hy = fg.copy(h2d("x"), "h2d_x"), fg.copy(h2d("y"), "h2d_y")
        dx, dy = fg.copy(d2h("x"), "d2h_x"), fg.copy(d2h("y"), "d2h_y")
        k = fg.on(kernel, "kernel") if isinstance(fg, CapturedGraph) else fg.kernel(kernel, "kernel")
        fg.succeed(k, hx, hy)
        fg.precede(k, dx, dy)

    g = TaskGraph("saxpy", num_domains=2)
    ax = g.static(_rec(log, "allocate_x"), "allocate_x")
    ay = g.static(_rec(log, "allocate_y"), "allocate_y")
    cf = g.deviceflow(flow, "cudaflow", domain=1, capture=capture)
    g.succeed(cf, ax, ay)

    def reset(seed=None):
        log.clear()
        host["x"], host["y"] = [1] * n, [2] * n
        dev.clear()

    return CorpusGraph(g.finalize(), log, dict(allocate_x=ax, allocate_y=ay, cudaflow=cf), host, reset)


def kmeans(iterations: int = 5) -> CorpusGraph:
    """h2d -> update -> cond, cond loops to update until converged, then d2h."""
    log: list[str] = []
    state = {"updates": 0, "payloads": 0}

    def device_task(name: str, body: Callable[[], None] | None = None):
        def build(fg: DeviceGraph):
            log.append(name)

            def op():
                state["payloads"] += 1
                if body:
                    body()

            fg.kernel(op, name)

        return build

    def update():
        state["updates"] += 1

    def converged():
        return 1 if state["updates"] >= iterations else 0

    g = TaskGraph("kmeans", num_domains=2)
    h2d = g.deviceflow(device_task("h2d"), "h2d", domain=1)
    upd = g.deviceflow(device_task("update", update), "update", domain=1)
    cond = g.condition(_rec(log, "cond", converged), "cond")
    d2h = g.deviceflow(device_task("d2h"), "d2h", domain=1)
    g.precede(h2d, upd)
    g.precede(upd, cond)
    g.precede(cond, upd, d2h)

    def reset(seed=None):
        log.clear()
        state["updates"] = state["payloads"] = 0

    return CorpusGraph(g.finalize(), log, dict(h2d=h2d, update=upd, cond=cond, d2h=d2h), state, reset)


CORPUS: dict[str, Callable[[], CorpusGraph]] = {
    "listing1": listing1,
    "listing2": listing2,
    "listing3": listing3,
    "if-else": if_else,
    "listing4": listing4,
    "fig6": fig6,
    "saxpy": saxpy,
    "saxpy-capture": lambda: saxpy(capture=True),
    "kmeans": kmeans,
}


def corpus_graph(name: str) -> CorpusGraph:
    try:
        return CORPUS[name]()
    except KeyError:
        raise KeyError(f"unknown corpus graph {name!r}; known: {', '.join(sorted(CORPUS))}") from None
