"""Two-phase-commit event notifier (an eventcount).

A worker that wants to sleep on a predicate does::

    n.prepare_wait(w)
    if predicate():          # re-check after announcing intent
        n.cancel_wait(w)
    else:
        n.commit_wait(w)     # parks unless notified since prepare_wait

and a producer makes the predicate true, then calls ``notify``.

Correctness hinges on a store-load ordering on both sides (Dekker): the
waiter stores its PREPARING state and then loads the predicate; the producer
stores the predicate and then loads the waiter states. At least one of the two
sees the other's store, so either the waiter sees the work or the producer
sees the waiter. Every state transition below happens under ``_lock``, which
gives that ordering; the predicate store/load happens outside, between
lock-protected calls, and the lock acquire/release on each side orders it.
"""

from __future__ import annotations

import enum
import threading
from collections import deque


class ProtocolViolation(RuntimeError):
    pass


class WaitState(enum.Enum):
    NONE = "none"
    PREPARING = "preparing"
    COMMITTED = "committed"


class _Waiter:
    __slots__ = ("state", "signaled", "wakeup")

    def __init__(self):
        self.state = WaitState.NONE
        # set when a notify targets this waiter while it is still preparing;
        # commit_wait then returns without parking
        self.signaled = False
        self.wakeup = threading.Event()


class Notifier:
    """Eventcount over a fixed set of waiter ids ``0..n_waiters-1``."""

    def __init__(self, n_waiters: int):
        self._lock = threading.Lock()
        self._waiters = [_Waiter() for _ in range(n_waiters)]
        self._preparing: dict[int, None] = {}  # insertion-ordered set
        self._parked: deque[int] = deque()
        self.epoch = 0

    def __len__(self) -> int:
        return len(self._waiters)

    def state(self, w: int) -> WaitState:
        return self._waiters[w].state

    @property
    def num_parked(self) -> int:
        return len(self._parked)

    @property
    def num_preparing(self) -> int:
        return len(self._preparing)

    def prepare_wait(self, w: int) -> None:
        waiter = self._waiters[w]
        with self._lock:
            if waiter.state is not WaitState.NONE:
                raise ProtocolViolation(f"prepare_wait({w}) in state {waiter.state.value}")
            waiter.state = WaitState.PREPARING
            waiter.signaled = False
            self._preparing[w] = None

    def cancel_wait(self, w: int) -> None:
        waiter = self._waiters[w]
        with self._lock:
            if waiter.state is not WaitState.PREPARING:
                raise ProtocolViolation(f"cancel_wait({w}) in state {waiter.state.value}")
            waiter.state = WaitState.NONE
            waiter.signaled = False
            del self._preparing[w]

    def commit_wait(self, w: int, timeout: float | None = None) -> bool:
        """Park until notified. Returns False only if ``timeout`` expired."""
        waiter = self._waiters[w]
        with self._lock:
            if waiter.state is not WaitState.PREPARING:
                raise ProtocolViolation(f"commit_wait({w}) in state {waiter.state.value}")
            del self._preparing[w]
            if waiter.signaled:
                waiter.signaled = False
                waiter.state = WaitState.NONE
                return True
            waiter.state = WaitState.COMMITTED
            waiter.wakeup.clear()
            self._parked.append(w)
        if waiter.wakeup.wait(timeout):
            return True
        with self._lock:
            if waiter.state is WaitState.NONE:
                # notified between the timeout and taking the lock
                return True
            self._parked.remove(w)
            waiter.state = WaitState.NONE
            return False

    def notify(self, all: bool = False) -> int:
        """Wake one (or every) waiter. Returns how many waiters were reached."""
        with self._lock:
            self.epoch += 1
            if all:
                reached = len(self._preparing) + len(self._parked)
                for w in self._preparing:
                    self._waiters[w].signaled = True
                while self._parked:
                    self._unpark(self._parked.popleft())
                return reached
            for w in self._preparing:
                waiter = self._waiters[w]
                if not waiter.signaled:
                    # a preparing waiter will not block; that is enough
                    waiter.signaled = True
                    return 1
            if self._parked:
                self._unpark(self._parked.popleft())
                return 1
            return 0

    def notify_one(self) -> int:
        return self.notify(False)

    def notify_all(self) -> int:
        return self.notify(True)

    def _unpark(self, w: int) -> None:
        waiter = self._waiters[w]
        waiter.state = WaitState.NONE
        waiter.wakeup.set()
