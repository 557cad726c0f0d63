"""
Simulation-based iterated local search: an initial uniform design, then a
loop of local search, acceptance and perturbation until the time budget
(or the optional iteration cap) runs out.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..config import SearchParams, SolverConfig
from ..errors import InfeasibleInstanceError
from ..graphkit import path_list, shortest_path_tree
from ..hydraulics import SolutionValidator
from ..network import Network, PipeTypeCatalog, Solution, solution_cost
from .acceptance import Pool, Scored, acceptance_criterion
from .local_search import local_search
from .perturbation import concentrated_perturbation, dispersed_perturbation

logger = logging.getLogger(__name__)


@dataclass
class SearchStats:
    iterations: int = 0
    simulator_calls: int = 0
    tested_solutions: int = 0
    feasible_tested: int = 0
    best_cost_trace: list = field(default_factory=list)   # (elapsed s, cost)
    time_to_best_s: float = 0.0
    factor_trace: list = field(default_factory=list)      # f seen by each local search
    perturbations: dict = field(default_factory=lambda: {"dispersed": 0, "concentrated": 0})

    @property
    def feasible_fraction(self) -> float:
        if not self.tested_solutions:
            return 0.0
        return self.feasible_tested / self.tested_solutions


def initial_solution(net: Network, cat: PipeTypeCatalog, validate) -> Solution:
    """Smallest uniform type that is still feasible, scanning down from the largest."""
    kept = None
    for t in range(cat.largest, 0, -1):
        candidate = Solution.uniform(net.pipe_ids, t)
        verdict = validate(candidate)
        if verdict:
            kept = candidate
            continue
        if kept is None:
            raise InfeasibleInstanceError(
                f"no feasible uniform solution: type {t} fails with {verdict.violation}")
        break
    return kept


class IteratedLocalSearch:
    def __init__(self, net: Network, cat: PipeTypeCatalog, params: SearchParams,
                 cfg: SolverConfig = SolverConfig()):
        self.net = net
        self.cat = cat
        self.params = params
        self.toggles = params.toggles
        self.rng = np.random.default_rng(params.seed)
        self.validator = SolutionValidator(net, cat, params.h_min, params.v_max, cfg)
        self.stats = SearchStats()
        self._start = None

    def _elapsed(self):
        return time.perf_counter() - self._start

    def _score(self, S: Solution) -> Scored:
        return Scored(S, solution_cost(S, self.net, self.cat))

    def _out_of_budget(self) -> bool:
        cap = self.params.max_iterations
        if cap is not None and self.stats.iterations >= cap:
            return True
        return self._elapsed() >= self.params.time_limit_s

    def _perturb(self, S: Solution) -> Solution:
        p, net, cat, rng = self.params, self.net, self.cat, self.rng
        kind = "dispersed"
        if self.toggles.perturbations and rng.random() > p.dispersed_probability:
            kind = "concentrated"
        self.stats.perturbations[kind] += 1
        logger.debug("iteration %d: %s perturbation", self.stats.iterations, kind)
        if kind == "dispersed":
            return dispersed_perturbation(net, cat, S, p.alpha, rng, self.validator)
        return concentrated_perturbation(net, cat, S, p.alpha, rng, self.validator)

    def run(self):
        p, stats = self.params, self.stats
        self._start = time.perf_counter()

        best = cur = self._score(initial_solution(self.net, self.cat, self.validator))
        stats.best_cost_trace.append((self._elapsed(), best.cost))
        stats.time_to_best_s = self._elapsed()
        logger.info("initial solution: uniform type %d, cost %.2f",
                    next(iter(best.solution.values()), 0), best.cost)

        pool = Pool(best, p.nu) if self.toggles.pool else None
        path_set = frozenset()
        if self.toggles.spt:
            path_set = path_list(self.net, shortest_path_tree(self.net), p.alpha)
        f = p.f0 if self.toggles.reduction else 1

        while not self._out_of_budget():
            stats.factor_trace.append(f)
            logger.debug("iteration %d: local search with f=%d", stats.iterations, f)
            cand = self._score(local_search(self.net, cur.solution, self.validator, p.alpha,
                                            f, path_set, self.rng))
            if f > 1:
                f //= 2

            previous_best = best
            cur, best = acceptance_criterion(best, cand, cur, pool, self.rng)
            if best is not previous_best:
                stats.time_to_best_s = self._elapsed()
                stats.best_cost_trace.append((stats.time_to_best_s, best.cost))
                logger.info("new best at iteration %d (%.1f s): %.2f",
                            stats.iterations, stats.time_to_best_s, best.cost)

            cur = self._score(self._perturb(cur.solution))
            stats.iterations += 1

        counter = self.validator.counter
        stats.simulator_calls = counter.simulator_calls
        stats.tested_solutions = counter.validations
        stats.feasible_tested = counter.feasible
        logger.info("search finished: %d iterations, %d simulator calls, best %.2f",
                    stats.iterations, stats.simulator_calls, best.cost)
        return best.solution, stats


def run(net: Network, cat: PipeTypeCatalog, params: SearchParams,
        cfg: Optional[SolverConfig] = None):
    return IteratedLocalSearch(net, cat, params, cfg or SolverConfig()).run()
