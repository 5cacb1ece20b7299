"""Chase-Lev work-stealing deque.

The owner pushes and pops at the bottom; any thread may steal from the top.
The only contended word is ``top``, advanced by compare-exchange. ``bottom``
is written by the owner alone.

Storage is a power-of-two ring that doubles when full. A thief that read the
old ring keeps a reference to it, and the old ring still holds every slot in
``[top, bottom)`` at the time of the grow, so no slot it can win is stale.
"""

from __future__ import annotations

from typing import Any, Generic, TypeVar

from .atomic import AtomicInt

T = TypeVar("T")

INITIAL_CAPACITY = 64


class _Retry:
    __slots__ = ()

    def __repr__(self) -> str:
        return "RETRY"

    def __bool__(self) -> bool:
        return False


#: Returned by :meth:`WorkDeque.steal` when a concurrent pop or steal won the
#: race for the top slot. The deque may still hold items.
RETRY: Any = _Retry()


class CapacityExceeded(RuntimeError):
    pass


class _Ring:
    __slots__ = ("mask", "slots")

    def __init__(self, capacity: int):
        self.mask = capacity - 1
        self.slots: list = [None] * capacity

    @property
    def capacity(self) -> int:
        return self.mask + 1

    def grow(self, top: int, bottom: int) -> "_Ring":
        ring = _Ring(self.capacity * 2)
        for i in range(top, bottom):
            ring.slots[i & ring.mask] = self.slots[i & self.mask]
        return ring


class WorkDeque(Generic[T]):
    """Single-owner, multi-thief deque.

    ``push`` and ``pop`` must only be called by the owning thread (or under a
    lock that makes the caller the owner). ``steal`` is safe from any thread.

    >>> q = WorkDeque()
    >>> for i in (1, 2, 3):
    ...     q.push(i)
    >>> q.pop(), q.steal()
    (3, 1)
    """

    def __init__(self, capacity: int = INITIAL_CAPACITY, growable: bool = True):
        if capacity < 1 or capacity & (capacity - 1):
            raise ValueError("capacity must be a positive power of two")
        self._top = AtomicInt(0)
        self._bottom = 0
        self._ring = _Ring(capacity)
        self._growable = growable

    def __len__(self) -> int:
        return max(self._bottom - self._top.value, 0)

    def empty(self) -> bool:
        return self._bottom <= self._top.value

    @property
    def capacity(self) -> int:
        return self._ring.capacity

    def push(self, item: T) -> None:
        b = self._bottom
        t = self._top.value
        ring = self._ring
        if b - t > ring.mask:
            if not self._growable:
                raise CapacityExceeded(f"deque full at {ring.capacity} items")
            ring = ring.grow(t, b)
            self._ring = ring
        ring.slots[b & ring.mask] = item
        # publish the slot before the new bottom becomes visible to thieves
        self._bottom = b + 1

    def pop(self) -> T | None:
        b = self._bottom - 1
        ring = self._ring
        # store bottom, then load top: thieves do the reverse. This store-load
        # pair is what keeps owner and thief from both taking the last item.
        self._bottom = b
        t = self._top.value
        if t > b:
            self._bottom = b + 1
            return None
        item = ring.slots[b & ring.mask]
        if t == b:
            # last item: race the thieves for it through top
            if not self._top.compare_exchange(t, t + 1):
                item = None
            self._bottom = b + 1
        return item

    def steal(self) -> T | None:
        """Take the oldest item, ``None`` if empty, or ``RETRY`` on a lost race."""
        t = self._top.value
        b = self._bottom
        if t >= b:
            return None
        ring = self._ring
        item = ring.slots[t & ring.mask]
        if not self._top.compare_exchange(t, t + 1):
            return RETRY
        return item
