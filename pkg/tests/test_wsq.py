import threading
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import htdg.wsq as wsq
from htdg.wsq import RETRY, CapacityExceeded, WorkDeque
from interleave import explore
from stress import stress_deque


def test_owner_end_is_lifo():
    q = WorkDeque()
    for i in (1, 2, 3):
        q.push(i)
    assert [q.pop(), q.pop(), q.pop()] == [3, 2, 1]


def test_thief_end_is_fifo():
    q = WorkDeque()
    for i in (1, 2, 3):
        q.push(i)
    got = []
    t = threading.Thread(target=lambda: got.extend(q.steal() for _ in range(3)))
    t.start()
    t.join()
    assert got == [1, 2, 3]


def test_empty_deque():
    q = WorkDeque()
    assert q.pop() is None
    assert q.steal() is None
    assert q.empty() and len(q) == 0


def test_retry_is_falsy_and_distinct_from_empty():
    assert not RETRY
    assert RETRY is not None
    assert repr(RETRY) == "RETRY"


def test_grows_from_64_by_doubling():
    q = WorkDeque()
    assert q.capacity == 64
    for i in range(65):
        q.push(i)
    assert q.capacity == 128
    # ring wrapped and grew with items still owned: order survives
    assert [q.steal() for _ in range(10)] == list(range(10))
    for i in range(65, 250):
        q.push(i)
    assert len(q) == 240 and q.capacity == 256
    assert sorted(q.pop() for _ in range(len(q))) == list(range(10, 250))


def test_fixed_capacity_raises():
    q = WorkDeque(capacity=4, growable=False)
    for i in range(4):
        q.push(i)
    with pytest.raises(CapacityExceeded):
        q.push(4)


def test_capacity_must_be_power_of_two():
    with pytest.raises(ValueError):
        WorkDeque(capacity=6)


class _ListModel:
    """Sequential reference: a plain list, push/pop at the right, steal at the left."""

    def __init__(self):
        self.items = []

    def push(self, x):
        self.items.append(x)

    def pop(self):
        return self.items.pop() if self.items else None

    def steal(self):
        return self.items.pop(0) if self.items else None


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from(["push", "pop", "steal"]), max_size=400))
def test_single_threaded_matches_list_model(ops):
    q, ref = WorkDeque(capacity=2), _ListModel()
    n = 0
    for op in ops:
        if op == "push":
            q.push(n)
            ref.push(n)
            n += 1
        else:
            assert getattr(q, op)() == getattr(ref, op)()
        assert len(q) == len(ref.items)


@pytest.mark.parametrize("seed", range(3))
def test_stress_exactly_once(seed):
    got = stress_deque(seed, 20_000, 4)
    assert got == Counter(range(20_000))


def _pop_vs_steal():
    q = WorkDeque()
    q.push("x")
    return [q.pop, q.steal], lambda: len(q)


def _exactly_one_winner(results):
    owner, thief, left = results
    taken = [r for r in (owner, thief) if r is not None and r is not RETRY]
    return taken == ["x"] and left == 0


def test_model_check_last_item_pop_vs_steal():
    outs = list(explore(_pop_vs_steal, [wsq.__file__], preemptions=3))
    assert len(outs) > 100
    assert all(_exactly_one_winner(o.results) for o in outs)
    # both sides win in some schedule, and the thief sees the lost race as RETRY
    outcomes = {(repr(o.results[0]), repr(o.results[1])) for o in outs}
    assert outcomes == {("'x'", "None"), ("None", "'x'"), ("'x'", "RETRY")}


def test_model_check_two_thieves_one_item():
    def make():
        q = WorkDeque()
        q.push("x")
        return [q.steal, q.steal], lambda: len(q)

    for o in explore(make, [wsq.__file__], preemptions=3):
        a, b, left = o.results
        assert [r for r in (a, b) if r is not None and r is not RETRY] == ["x"]
        assert left == 0


def test_model_check_pop_pop_vs_steal_two_items():
    def make():
        q = WorkDeque()
        q.push(1)
        q.push(2)

        def owner():
            return [q.pop(), q.pop()]

        return [owner, q.steal], None

    for o in explore(make, [wsq.__file__], preemptions=2):
        owner, thief = o.results
        got = [x for x in owner + [thief] if x is not None and x is not RETRY]
        assert sorted(got) == [1, 2]


class _NoCasDeque(WorkDeque):
    """Broken on purpose: pop takes the last item without racing thieves."""

    def pop(self):
        b = self._bottom - 1
        ring = self._ring
        self._bottom = b
        t = self._top.value
        if t > b:
            self._bottom = b + 1
            return None
        item = ring.slots[b & ring.mask]
        if t == b:
            self._bottom = b + 1
        return item


def test_model_check_catches_missing_cas():
    def make():
        q = _NoCasDeque()
        q.push("x")
        return [q.pop, q.steal], lambda: len(q)

    bad = [o for o in explore(make, [wsq.__file__, __file__], preemptions=2)
           if not _exactly_one_winner(o.results)]
    assert bad, "the explorer should find the double take"
