"""Owner-versus-thieves stress run on one deque."""

import random
import threading
from collections import Counter

from htdg.wsq import RETRY, WorkDeque


def stress_deque(seed: int, items: int, thieves: int, pop_prob: float = 0.3) -> Counter:
    """Owner pushes ``0..items-1`` and pops at random while ``thieves`` steal.

    Returns the multiset of everything taken, by owner and thieves together.
    """
    q = WorkDeque()
    stolen: list[list[int]] = [[] for _ in range(thieves)]
    popped: list[int] = []
    done = threading.Event()

    def thief(k):
        out = stolen[k]
        steal = q.steal
        while True:
            x = steal()
            if x is not None and x is not RETRY:
                out.append(x)
            elif done.is_set() and q.empty():
                return

    ts = [threading.Thread(target=thief, args=(k,)) for k in range(thieves)]
    for t in ts:
        t.start()
    rng = random.Random(seed)
    coin = rng.random
    push, pop = q.push, q.pop
    for i in range(items):
        push(i)
        if coin() < pop_prob:
            x = pop()
            if x is not None:
                popped.append(x)
    # drain what the thieves have not reached yet
    while True:
        x = pop()
        if x is None:
            break
        popped.append(x)
    done.set()
    for t in ts:
        t.join()
    out = Counter(popped)
    for s in stolen:
        out.update(s)
    return out
