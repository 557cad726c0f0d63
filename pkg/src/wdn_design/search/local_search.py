import logging

import numpy as np

from ..network import Network, Solution

logger = logging.getLogger(__name__)


def length_rcl(candidates, alpha):
    """Pipes whose length lies in [l_max - alpha (l_max - l_min), l_max]."""
    lengths = [p.length_m for p in candidates]
    l_max, l_min = max(lengths), min(lengths)
    threshold = l_max - alpha * (l_max - l_min)
    return [p for p in candidates if p.length_m >= threshold]


def local_search(net: Network, S: Solution, validate, alpha: float, f: int,
                 path_set: frozenset, rng: np.random.Generator) -> Solution:
    """Reduce pipe types by f, longest pipes first, until no move is accepted.

    Pipes in path_set are postponed: they are only picked when the restricted
    candidate list holds nothing else. A rejected pipe stays tabu for the rest
    of the call.
    """
    tabu = set()
    accepted = 0
    improved = True
    while improved:
        improved = False
        candidates = [p for p in net.pipes if p.id not in tabu]
        while candidates:
            rcl = length_rcl(candidates, alpha)
            free = [p for p in rcl if p.id not in path_set]
            choices = free or rcl
            pipe = choices[rng.integers(len(choices))]
            if S[pipe.id] > f:
                neighbour = S.with_types({pipe.id: S[pipe.id] - f})
                if validate(neighbour):
                    S = neighbour
                    improved = True
                    accepted += 1
                else:
                    tabu.add(pipe.id)
            candidates.remove(pipe)
    logger.debug("local search f=%d: %d reductions, %d tabu", f, accepted, len(tabu))
    return S
