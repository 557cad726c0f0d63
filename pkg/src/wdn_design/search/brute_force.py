import itertools
import logging

from ..errors import InfeasibleInstanceError, SearchSpaceTooLarge
from ..network import Network, PipeTypeCatalog, Solution, solution_cost

logger = logging.getLogger(__name__)

DEFAULT_BRUTE_FORCE_LIMIT = 10 ** 6


def brute_force_optimum(net: Network, cat: PipeTypeCatalog, validate,
                        limit: int = DEFAULT_BRUTE_FORCE_LIMIT):
    """Cheapest feasible assignment by exhaustive enumeration; (Solution, cost)."""
    size = len(cat) ** len(net.pipes)
    if size > limit:
        raise SearchSpaceTooLarge(f"{len(cat)}^{len(net.pipes)} = {size} assignments "
                                  f"exceed the limit of {limit}")
    pipe_ids = net.pipe_ids
    best, best_cost = None, float("inf")
    checked = 0
    for types in itertools.product(range(1, len(cat) + 1), repeat=len(pipe_ids)):
        S = Solution(zip(pipe_ids, types))
        cost = solution_cost(S, net, cat)
        # not cheaper than the incumbent, so never the answer
        if cost >= best_cost:
            continue
        checked += 1
        if validate(S):
            best, best_cost = S, cost
    logger.info("brute force: %d assignments, %d simulated", size, checked)
    if best is None:
        raise InfeasibleInstanceError("no feasible assignment exists")
    return best, best_cost
