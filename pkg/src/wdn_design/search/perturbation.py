"""
Perturbations that enlarge pipe types to escape local optima.

Both follow the same shrinking loop: try batches of m pipes, drop one random
member of each rejected batch from the candidates, and halve m once the
candidates run out. The dispersed kind draws batches uniformly over the whole
network; the concentrated kind draws them around one expensive pipe,
nearest distance levels first.
"""

import logging
import math

import numpy as np

from ..errors import ContractViolation
from ..graphkit import LevelMap, bfs_levels
from ..network import Network, PipeTypeCatalog, Solution, pipe_cost

logger = logging.getLogger(__name__)

# the cost RCL always holds at least this many of the most expensive pipes
MIN_COST_RCL = 5


def batch_size(alpha: float, pipe_count: int) -> int:
    return math.floor(alpha * pipe_count)


def _shrinking_batches(S, cat, validate, candidates, m, rng, draw):
    while m > 0:
        remaining = list(candidates)
        while remaining:
            batch = draw(remaining, m)
            perturbed = S.incremented(batch, cat.largest)
            if validate(perturbed):
                return perturbed
            remaining.remove(batch[rng.integers(len(batch))])
        m //= 2
    return S


def dispersed_perturbation(net: Network, cat: PipeTypeCatalog, S: Solution, alpha: float,
                           rng: np.random.Generator, validate) -> Solution:
    def draw(remaining, m):
        picks = rng.choice(len(remaining), size=min(m, len(remaining)), replace=False)
        return [remaining[i] for i in picks]

    m = batch_size(alpha, len(net.pipes))
    return _shrinking_batches(S, cat, validate, net.pipe_ids, m, rng, draw)


def selection_criterion(candidates: list, levels: LevelMap, m: int,
                        rng: np.random.Generator) -> list:
    """Exactly min(m, len(candidates)) pipes, favouring low distance levels.

    Inside a level each pipe is taken with probability r1/r2 (r1 still to
    pick, r2 still to look at), so every subset of the size taken from that
    level is equally likely.
    """
    if not candidates:
        raise ContractViolation("selection needs a nonempty candidate set")
    if m < 1:
        raise ContractViolation("selection size must be at least 1")
    r1 = min(m, len(candidates))
    chosen = []
    for _, level in levels.level_sets(candidates):
        r2 = len(level)
        for pipe_id in level:
            if rng.random() * r2 < r1:
                chosen.append(pipe_id)
                r1 -= 1
            r2 -= 1
            if r1 == 0:
                return chosen
    return chosen


def cost_rcl(net: Network, S: Solution, cat: PipeTypeCatalog, alpha: float) -> list:
    psi = {p.id: pipe_cost(S, p, cat) for p in net.pipes}
    psi_max, psi_min = max(psi.values()), min(psi.values())
    threshold = psi_max - alpha * (psi_max - psi_min)
    top = set(sorted(psi, key=lambda pid: -psi[pid])[:MIN_COST_RCL])
    return [p for p in net.pipes if psi[p.id] >= threshold or p.id in top]


def concentrated_perturbation(net: Network, cat: PipeTypeCatalog, S: Solution, alpha: float,
                              rng: np.random.Generator, validate) -> Solution:
    if not net.pipes:
        return S
    rcl = cost_rcl(net, S, cat, alpha)
    seed_pipe = rcl[rng.integers(len(rcl))]
    levels = bfs_levels(net, seed_pipe.endpoints)
    logger.debug("concentrated perturbation around pipe %s", seed_pipe.id)

    def draw(remaining, m):
        return selection_criterion(remaining, levels, m, rng)

    others = [pid for pid in net.pipe_ids if pid != seed_pipe.id]
    m = batch_size(alpha, len(net.pipes))
    return _shrinking_batches(S, cat, validate, others, m, rng, draw)
