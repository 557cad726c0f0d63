from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional

# -------------------------------------
#   Data Classes
# -------------------------------------
@dataclass(frozen=True)
class SolverConfig: # steady-state hydraulic solver settings
    flow_tolerance: float = 0.001   # relative flow change, sum|dq| / sum|q|
    max_iterations: int = 200
    init_velocity: float = 0.3048   # m/s, seeds the initial pipe flows
    gradient_floor: float = 1e-7    # minimum head-loss derivative, m per m3/s
    head_tolerance: float = 1e-7    # max |headloss(q) - head difference|, m

    def __post_init__(self):
        for name in ("flow_tolerance", "max_iterations", "init_velocity",
                     "gradient_floor", "head_tolerance"):
            if not getattr(self, name) > 0:
                raise ValueError(f"SolverConfig.{name} must be strictly positive")


class Variant(str, Enum):
    FULL = "full"
    BASE = "base"
    REDU_ONLY = "redu-only"
    POOL_ONLY = "pool-only"
    PERT_ONLY = "pert-only"
    SPT_ONLY = "spt-only"


class Toggles(NamedTuple):
    reduction: bool     # aggressive type reduction factor f0 > 1
    pool: bool          # pool of solutions in the acceptance criterion
    perturbations: bool # concentrated perturbation next to the dispersed one
    spt: bool           # shortest-path protected pipes in the local search


# Each ablation variant switches on exactly one improvement on top of base
VARIANT_TOGGLES = {
    Variant.FULL: Toggles(True, True, True, True),
    Variant.BASE: Toggles(False, False, False, False),
    Variant.REDU_ONLY: Toggles(True, False, False, False),
    Variant.POOL_ONLY: Toggles(False, True, False, False),
    Variant.PERT_ONLY: Toggles(False, False, True, False),
    Variant.SPT_ONLY: Toggles(False, False, False, True),
}


@dataclass(frozen=True)
class SearchParams: # iterated local search settings
    alpha: float = 0.05         # greediness of every restricted candidate list
    f0: int = 4                 # initial type reduction factor
    nu: int = 3                 # pool size
    time_limit_s: float = 60.0
    seed: int = 0
    variant: Variant = Variant.FULL
    pert_prob: Optional[float] = None   # P(dispersed); None means 1 - alpha
    max_iterations: Optional[int] = None
    h_min: float = 20.0         # m of pressure head at every junction
    v_max: float = 2.0          # m/s in every pipe

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.f0 < 1:
            raise ValueError("f0 must be at least 1")
        if self.nu < 1:
            raise ValueError("nu must be at least 1")
        if self.time_limit_s < 0:
            raise ValueError("time_limit_s must be nonnegative")
        if self.pert_prob is not None and not 0.0 <= self.pert_prob <= 1.0:
            raise ValueError("pert_prob must lie in [0, 1]")

    @property
    def toggles(self) -> Toggles:
        return VARIANT_TOGGLES[self.variant]

    @property
    def dispersed_probability(self) -> float:
        return 1.0 - self.alpha if self.pert_prob is None else self.pert_prob

# -------------------------------------
#   Defaults
# -------------------------------------
DEFAULT_H_MIN = 20.0
DEFAULT_V_MAX = 2.0
DEFAULT_PERIOD_COUNT = 24
DEFAULT_TIME_LIMITS = (60, 180, 300, 600)
DEFAULT_SEED_COUNT = 10

# Environment variable naming a catalog file that replaces the built-in one
CATALOG_ENV_VAR = "WDN_DESIGN_CATALOG"

# index, diameter (mm), Hazen-Williams roughness, cost per meter.
# Types 12 and 13 are identical on purpose; duplicates are kept.
DEFAULT_CATALOG_ROWS = (
    (1, 20, 130, 9),
    (2, 30, 130, 20),
    (3, 40, 130, 25),
    (4, 50, 130, 30),
    (5, 60, 130, 35),
    (6, 80, 130, 48),
    (7, 100, 130, 50),
    (8, 150, 130, 61),
    (9, 200, 130, 116),
    (10, 250, 130, 150),
    (11, 300, 130, 201),
    (12, 400, 130, 290),
    (13, 400, 130, 290),
    (14, 500, 130, 351),
    (15, 600, 130, 528),
    (16, 1000, 130, 628),
)

# -------------------------------------
#   Logging
# -------------------------------------
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
