"""Search procedures: local search, perturbations, acceptance and the ILS loop."""

from .acceptance import Pool, Scored, acceptance_criterion
from .brute_force import brute_force_optimum
from .engine import IteratedLocalSearch, SearchStats, initial_solution, run
from .local_search import local_search
from .perturbation import (concentrated_perturbation, dispersed_perturbation,
                           selection_criterion)

__all__ = [
    "IteratedLocalSearch", "Pool", "Scored", "SearchStats", "acceptance_criterion",
    "brute_force_optimum", "concentrated_perturbation", "dispersed_perturbation",
    "initial_solution", "local_search", "run", "selection_criterion",
]
