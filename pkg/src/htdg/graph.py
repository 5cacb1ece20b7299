"""Task graph model: task kinds, strong/weak edges, composition, lint, DOT."""

from __future__ import annotations

import enum
import re
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

from .errors import (
    CompositionCycle,
    DuplicateEdge,
    FinalizedGraph,
    SelfLoopOnStrongEdge,
    UnfinalizedChild,
    UnknownDomain,
    UnknownNode,
    ValidationFailed,
)


class TaskKind(enum.Enum):
    STATIC = "static"
    SUBFLOW = "subflow"
    MODULE = "module"
    CONDITION = "condition"
    DEVICEFLOW = "deviceflow"


@dataclass(eq=False)
class TaskNode:
    id: int
    kind: TaskKind
    domain: int
    work: Any
    name: str = ""
    successors: list[int] = field(default_factory=list)
    predecessors: list[int] = field(default_factory=list)
    strong_dependents: int = 0
    weak_dependents: int = 0
    # deviceflow only: hand the builder a stream capturer instead of an
    # explicit device graph
    capture: bool = False

    @property
    def is_source(self) -> bool:
        return self.strong_dependents + self.weak_dependents == 0

    @property
    def label(self) -> str:
        return self.name or f"n{self.id}"


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "warning" | "error"
    code: str  # NoSource | PossibleRace | DanglingCondition | ConcurrentModuleUse
    nodes: tuple[int, ...]
    message: str


class TaskGraph:
    """A heterogeneous task dependency graph under construction or ready to run.

    Node ids are dense ordinals in insertion order. Edges out of a condition
    task are *weak*: they never count toward the target's join counter, and
    the condition's integer return value picks the one successor to run.
    Every other edge is *strong*.
    """

    def __init__(self, name: str = "", num_domains: int = 1):
        if num_domains < 1:
            raise ValueError("num_domains must be >= 1")
        self.name = name
        self.num_domains = num_domains
        self.nodes: list[TaskNode] = []
        self.composed_children: list[TaskGraph] = []
        self.finalized = False
        # set by the executor while a run of this graph is in flight
        self._running = False

    def __len__(self) -> int:
        return len(self.nodes)

    def __iter__(self):
        return iter(self.nodes)

    def __repr__(self) -> str:
        state = "finalized" if self.finalized else "building"
        return f"<TaskGraph {self.name!r} {len(self.nodes)} nodes, {state}>"

    @property
    def num_edges(self) -> int:
        return sum(len(n.successors) for n in self.nodes)

    # -- building ---------------------------------------------------------

    def _check_mutable(self) -> None:
        if self.finalized:
            raise FinalizedGraph(f"graph {self.name!r} is finalized")

    def _node(self, nid: int) -> TaskNode:
        if not isinstance(nid, int) or not 0 <= nid < len(self.nodes):
            raise UnknownNode(f"no node {nid!r} in graph {self.name!r}")
        return self.nodes[nid]

    def add_task(
        self,
        kind: TaskKind,
        work: Any = None,
        domain: int = 0,
        name: str = "",
        capture: bool = False,
    ) -> int:
        self._check_mutable()
        if not 0 <= domain < self.num_domains:
            raise UnknownDomain(f"domain {domain} not in [0, {self.num_domains})")
        node = TaskNode(len(self.nodes), TaskKind(kind), domain, work, name, capture=capture)
        self.nodes.append(node)
        return node.id

    def static(self, fn: Callable[[], Any] | None = None, name: str = "", domain: int = 0) -> int:
        return self.add_task(TaskKind.STATIC, fn, domain, name)

    def condition(self, fn: Callable[[], int], name: str = "", domain: int = 0) -> int:
        return self.add_task(TaskKind.CONDITION, fn, domain, name)

    def subflow(self, fn: Callable[["Subflow"], Any], name: str = "", domain: int = 0) -> int:
        return self.add_task(TaskKind.SUBFLOW, fn, domain, name)

    def deviceflow(
        self, fn: Callable[[Any], Any], name: str = "", domain: int = 1, capture: bool = False
    ) -> int:
        return self.add_task(TaskKind.DEVICEFLOW, fn, domain, name, capture=capture)

    def emplace(self, *fns: Callable[[], Any], names: Iterable[str] = ()) -> tuple[int, ...]:
        """Add one static task per callable; returns their ids."""
        names = list(names) or [""] * len(fns)
        return tuple(self.static(fn, name) for fn, name in zip(fns, names))

    def precede(self, src: int, *dsts: int) -> None:
        self._check_mutable()
        u = self._node(src)
        targets = [self._node(d) for d in dsts]
        weak = u.kind is TaskKind.CONDITION
        seen = set(u.successors)
        for v in targets:
            if v.id in seen:
                raise DuplicateEdge(f"edge {u.label} -> {v.label} already exists")
            if v is u and not weak:
                raise SelfLoopOnStrongEdge(f"{u.label} cannot strongly precede itself")
            seen.add(v.id)
        for v in targets:
            u.successors.append(v.id)
            v.predecessors.append(u.id)
            if weak:
                v.weak_dependents += 1
            else:
                v.strong_dependents += 1

    def succeed(self, dst: int, *srcs: int) -> None:
        for s in srcs:
            self.precede(s, dst)

    def compose(self, child: "TaskGraph", name: str = "", domain: int = 0) -> int:
        """Add a module task that runs all of ``child`` as one unit."""
        self._check_mutable()
        if child is self or self in child.composition_closure():
            raise CompositionCycle(f"composing {child.name!r} into {self.name!r} forms a cycle")
        if not child.finalized:
            raise UnfinalizedChild(f"graph {child.name!r} must be finalized before composition")
        nid = self.add_task(TaskKind.MODULE, child, domain, name or child.name)
        if child not in self.composed_children:
            self.composed_children.append(child)
        return nid

    def composition_closure(self) -> list["TaskGraph"]:
        """All graphs reachable through module tasks, excluding self."""
        out: list[TaskGraph] = []
        stack = list(self.composed_children)
        while stack:
            g = stack.pop()
            if any(g is h for h in out):
                continue
            out.append(g)
            stack.extend(g.composed_children)
        return out

    # -- queries ----------------------------------------------------------

    def sources(self) -> list[int]:
        return [n.id for n in self.nodes if n.is_source]

    def descendants(self, nid: int, blocked: int | None = None) -> set[int]:
        """Nodes reachable from ``nid`` over any edge, not passing ``blocked``."""
        seen: set[int] = set()
        todo = deque([nid])
        while todo:
            for s in self.nodes[todo.popleft()].successors:
                if s not in seen and s != blocked:
                    seen.add(s)
                    todo.append(s)
        return seen

    def _reachable_from_sources(self, blocked: int) -> set[int]:
        seen = {s for s in self.sources() if s != blocked}
        todo = deque(seen)
        while todo:
            for s in self.nodes[todo.popleft()].successors:
                if s not in seen and s != blocked:
                    seen.add(s)
                    todo.append(s)
        return seen

    # -- validation -------------------------------------------------------

    def validate(self) -> list[Diagnostic]:
        """Lint for the scheduling pitfalls of conditional tasking.

        The race checks are a conservative reachability heuristic, not a
        verifier: two tasks are treated as possibly concurrent when there is
        no path between them.
        """
        diags: list[Diagnostic] = []
        if self.nodes and not self.sources():
            diags.append(
                Diagnostic(
                    "error",
                    "NoSource",
                    (),
                    "no task has zero strong and weak dependencies; nothing can start",
                )
            )
        desc_cache: dict[int, set[int]] = {}

        def desc(nid: int) -> set[int]:
            if nid not in desc_cache:
                desc_cache[nid] = self.descendants(nid)
            return desc_cache[nid]

        for v in self.nodes:
            if v.kind is TaskKind.CONDITION and not v.successors:
                diags.append(
                    Diagnostic(
                        "warning",
                        "DanglingCondition",
                        (v.id,),
                        f"condition {v.label} has no successors to select",
                    )
                )
            if not v.weak_dependents:
                continue
            conds = sorted({p for p in v.predecessors if self.nodes[p].kind is TaskKind.CONDITION})
            strong = sorted({p for p in v.predecessors if self.nodes[p].kind is not TaskKind.CONDITION})
            racers: set[int] = set()
            for c in conds:
                reach_without_c = None
                for u in strong:
                    if c in desc(u):
                        continue  # u finishes before c can first run
                    if reach_without_c is None:
                        reach_without_c = self._reachable_from_sources(blocked=c)
                    if u in reach_without_c:
                        racers.update((c, u))
            # two conditions that can fire at the same time both jumping here
            for i, a in enumerate(conds):
                for b in conds[i + 1 :]:
                    if b not in desc(a) and a not in desc(b):
                        racers.update((a, b))
            if racers:
                diags.append(
                    Diagnostic(
                        "warning",
                        "PossibleRace",
                        (v.id, *sorted(racers)),
                        f"{v.label} can be reached by concurrent paths through "
                        + ", ".join(self.nodes[r].label for r in sorted(racers)),
                    )
                )
        modules: dict[int, list[int]] = {}
        for n in self.nodes:
            if n.kind is TaskKind.MODULE:
                modules.setdefault(id(n.work), []).append(n.id)
        for ids in modules.values():
            for i, a in enumerate(ids):
                for b in ids[i + 1 :]:
                    if b not in desc(a) and a not in desc(b):
                        diags.append(
                            Diagnostic(
                                "warning",
                                "ConcurrentModuleUse",
                                (a, b),
                                f"module tasks {self.nodes[a].label} and {self.nodes[b].label} "
                                "share a graph and may run concurrently",
                            )
                        )
        diags.sort(key=lambda d: (d.nodes[0] if d.nodes else -1, d.code))
        return diags

    def finalize(self) -> "TaskGraph":
        if self.finalized:
            return self
        diags = self.validate()
        errors = [d for d in diags if d.severity == "error"]
        if errors:
            raise ValidationFailed(errors)
        self.finalized = True
        return self

    # -- export -----------------------------------------------------------

    def export_dot(self) -> str:
        idents = _dot_idents(self.nodes)
        body: list[str] = []
        for n in self.nodes:
            attrs: list[str] = []
            if n.kind is TaskKind.CONDITION:
                attrs.append("shape=diamond")
            elif n.kind is TaskKind.DEVICEFLOW:
                attrs.append("shape=box")
                attrs.append(f'label="{_escape(n.label)} @{n.domain}"')
            elif n.kind is TaskKind.MODULE:
                attrs.append("shape=box3d")
            elif n.kind is TaskKind.SUBFLOW:
                attrs.append("peripheries=2")
            if idents[n.id] != n.label and n.kind is not TaskKind.DEVICEFLOW:
                attrs.append(f'label="{_escape(n.label)}"')
            body.append(f"  {idents[n.id]}" + (f" [{', '.join(attrs)}];" if attrs else ";"))
        for n in self.nodes:
            style = " [style=dashed]" if n.kind is TaskKind.CONDITION else ""
            for s in n.successors:
                body.append(f"  {idents[n.id]} -> {idents[s]}{style};")
        if not body:
            return "digraph {}\n"
        return "digraph {\n" + "\n".join(body) + "\n}\n"


class Subflow(TaskGraph):
    """Graph spawned by a subflow task while it runs.

    Joined by default: the parent's successors wait until every spawned task
    finishes. After :meth:`detach` the parent's successors proceed at once and
    the spawned tasks only hold up completion of the whole run.
    """

    def __init__(self, name: str = "", num_domains: int = 1):
        super().__init__(name, num_domains)
        self.joined = True

    def detach(self) -> None:
        self.joined = False

    def join(self) -> None:
        self.joined = True


_DOT_ID = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_FALLBACK_ID = re.compile(r"n[0-9]+\Z")
_DOT_KEYWORDS = {"node", "edge", "graph", "digraph", "subgraph", "strict"}


def _dot_idents(nodes: list[TaskNode]) -> list[str]:
    counts: dict[str, int] = {}
    for n in nodes:
        counts[n.name] = counts.get(n.name, 0) + 1
    out = []
    for n in nodes:
        name = n.name
        ok = (
            name
            and counts[name] == 1
            and _DOT_ID.match(name)
            and name.lower() not in _DOT_KEYWORDS
            and not _FALLBACK_ID.match(name)
        )
        out.append(name if ok else f"n{n.id}")
    return out


def _escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')
