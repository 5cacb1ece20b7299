"""Independent checks of a stream schedule against its device graph."""

from htdg.capture import DeviceGraph, levelize, make_schedule, simulate


def random_dag(draw_edges, n):
    g = DeviceGraph()
    for i in range(n):
        g.kernel(name=f"o{i}")
    for u, v in draw_edges:
        a, b = min(u, v), max(u, v)
        if a != b:
            g.precede(a, b)
    return g


def check_schedule(g: DeviceGraph, k: int, latency=None) -> None:
    """Independent recount of every schedule invariant on one graph."""
    s = make_schedule(g, k)
    t = levelize(g)
    placed = [op for ops in s.streams for op in ops]
    assert sorted(placed) == list(range(len(g)))
    assert len(s.streams) <= k
    for op in range(len(g)):
        assert s.stream_of(op) == t.index[op] % k
    cross = {(p, q) for p, q in g.edges() if s.stream_of(p) != s.stream_of(q)}
    assert set(s.events) == cross and len(s.events) == len(cross)
    pos = {op: i for ops in s.streams for i, op in enumerate(ops)}
    for p, q in g.edges():
        if (p, q) not in cross:
            assert pos[p] < pos[q]
    tr = simulate(s, latency)
    rec = tr.by_op()
    assert len(rec) == len(g)
    for p, q in g.edges():
        assert rec[p].completion < rec[q].start
    for ops in s.streams:
        starts = [rec[o].start for o in ops]
        assert starts == sorted(starts)
    assert make_schedule(g, k).dump() == s.dump()
