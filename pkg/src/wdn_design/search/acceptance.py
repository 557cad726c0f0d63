import logging
from typing import NamedTuple, Optional

import numpy as np

from ..network import Solution

logger = logging.getLogger(__name__)


class Scored(NamedTuple):
    solution: Solution
    cost: float


class Pool:
    """Fixed number of elite solutions; the worst slot (oldest on ties) is replaced."""

    def __init__(self, initial: Scored, size: int):
        if size < 1:
            raise ValueError("pool size must be at least 1")
        self.slots = [initial] * size
        self._stamps = [0] * size
        self._clock = 0

    def __len__(self):
        return len(self.slots)

    def __iter__(self):
        return iter(self.slots)

    def worst_index(self) -> int:
        return max(range(len(self.slots)),
                   key=lambda i: (self.slots[i].cost, -self._stamps[i], -i))

    def replace_worst(self, entry: Scored):
        self._clock += 1
        i = self.worst_index()
        self.slots[i] = entry
        self._stamps[i] = self._clock


def acceptance_criterion(best: Scored, cand: Scored, cur: Scored, pool: Optional[Pool],
                         rng: np.random.Generator):
    """Returns (next current solution, best). pool=None runs without a pool."""
    if cand.cost < cur.cost:
        if cand.cost < best.cost:
            best = cand
        elif pool is not None:
            pool.replace_worst(cand)
        return cand, best
    members = list(pool) if pool is not None else []
    members.append(best)
    return members[rng.integers(len(members))], best
