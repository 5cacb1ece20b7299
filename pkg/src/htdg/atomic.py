"""Small atomic integer used where the scheduler needs read-modify-write.

CPython has no user-visible CAS, so the RMW operations take a lock. Plain
loads and stores go straight to the attribute: under the GIL a single
attribute read or write is indivisible and sequentially consistent, which is
the ordering the deque and scheduler counters rely on.
"""

from __future__ import annotations

import threading


class AtomicInt:
    __slots__ = ("value", "_lock")

    def __init__(self, value: int = 0):
        self.value = value
        self._lock = threading.Lock()

    def load(self) -> int:
        return self.value

    def store(self, value: int) -> None:
        self.value = value

    def inc(self) -> int:
        """Increment and return the new value."""
        with self._lock:
            self.value += 1
            return self.value

    def dec(self) -> int:
        """Decrement and return the new value."""
        with self._lock:
            self.value -= 1
            return self.value

    def compare_exchange(self, expected: int, desired: int) -> bool:
        with self._lock:
            if self.value != expected:
                return False
            self.value = desired
            return True

    def __repr__(self) -> str:
        return f"AtomicInt({self.value})"
