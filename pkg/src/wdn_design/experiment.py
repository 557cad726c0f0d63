"""
Experiment grids: seeded replications of the search over instances, time
limits and variants, and the comparison tables built from their records.
"""

import logging
import os
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - Python 3.10 fallback, same parser
    import tomli as tomllib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Optional

import pandas as pd

from .config import (DEFAULT_H_MIN, DEFAULT_SEED_COUNT, DEFAULT_TIME_LIMITS, DEFAULT_V_MAX,
                     SearchParams, SolverConfig, Variant)
from .data_io import RunRecord, load_catalog, load_instance, records_frame
from .errors import PairingError, WdnDesignError
from .search.engine import run

logger = logging.getLogger(__name__)

INDICATORS = ("iterations", "simulator_calls", "tested_solutions", "feasible_fraction")


@dataclass(frozen=True)
class ExperimentPlan:
    instances: tuple
    catalog: Optional[Path] = None
    time_limits: tuple = DEFAULT_TIME_LIMITS
    seeds: tuple = tuple(range(DEFAULT_SEED_COUNT))
    variants: tuple = (Variant.FULL,)
    h_min: float = DEFAULT_H_MIN
    v_max: float = DEFAULT_V_MAX
    output: Optional[Path] = None
    search: SearchParams = field(default_factory=SearchParams)
    instance_ids: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "instances", tuple(Path(p) for p in self.instances))
        object.__setattr__(self, "variants", tuple(Variant(v) for v in self.variants))
        if not self.instances:
            raise ValueError("plan lists no instances")
        if not self.seeds:
            raise ValueError("plan lists no seeds")
        if not self.time_limits:
            raise ValueError("plan lists no time limits")
        if not self.variants:
            raise ValueError("plan lists no variants")
        object.__setattr__(self, "instance_ids", _instance_ids(self.instances))

    def tasks(self) -> list:
        """(instance, limit, seed, variant) in record order."""
        return [(inst, limit, seed, variant)
                for inst in sorted(self.instances, key=self.instance_ids.get)
                for limit in sorted(self.time_limits)
                for seed in sorted(self.seeds)
                for variant in sorted(self.variants, key=lambda v: v.value)]


def _instance_ids(instances) -> dict:
    """Path -> record id: the file stem, or the suffix-free path below the
    instances' common folder when two files share a stem."""
    stems = [p.stem for p in instances]
    if len(set(stems)) == len(stems):
        return {p: p.stem for p in instances}
    if len(set(instances)) != len(instances):
        raise ValueError("plan lists an instance file twice")
    base = Path(os.path.commonpath([p.parent for p in instances]))
    return {p: p.relative_to(base).with_suffix("").as_posix() for p in instances}


def load_plan(path) -> ExperimentPlan:
    """Read a TOML plan; relative paths are taken from the plan's folder.

    seeds may be a list or a count (0..count-1). Search settings go in a
    [search] table with SearchParams field names.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    base = path.parent

    def resolve(p):
        p = Path(p)
        return p if p.is_absolute() else base / p

    seeds = data.get("seeds", DEFAULT_SEED_COUNT)
    if isinstance(seeds, int):
        seeds = range(seeds)
    plan = ExperimentPlan(
        instances=tuple(resolve(p) for p in data.get("instances", ())),
        catalog=resolve(data["catalog"]) if "catalog" in data else None,
        time_limits=tuple(float(t) for t in data.get("time_limits", DEFAULT_TIME_LIMITS)),
        seeds=tuple(int(s) for s in seeds),
        variants=tuple(data.get("variants", ("full",))),
        h_min=float(data.get("h_min", DEFAULT_H_MIN)),
        v_max=float(data.get("v_max", DEFAULT_V_MAX)),
        output=resolve(data["output"]) if "output" in data else None,
        search=SearchParams(**data.get("search", {})),
    )
    logger.info("plan %s: %d runs", path.name, len(plan.tasks()))
    return plan


def _run_task(plan: ExperimentPlan, task) -> RunRecord:
    instance, limit, seed, variant = task
    instance_id = plan.instance_ids[instance]
    try:
        net, _ = load_instance(instance)
        cat = load_catalog(plan.catalog)
        params = replace(plan.search, time_limit_s=limit, seed=seed, variant=variant,
                         h_min=plan.h_min, v_max=plan.v_max)
        best, stats = run(net, cat, params, SolverConfig())
    except (WdnDesignError, OSError) as exc:
        logger.warning("%s seed %d (%s): %s", instance_id, seed, variant.value, exc)
        return RunRecord.failed(instance_id, seed, limit, variant.value, str(exc))
    return RunRecord(
        instance_id=instance_id,
        seed=seed,
        time_limit_s=limit,
        variant=variant.value,
        best_cost=stats.best_cost_trace[-1][1],
        time_to_best_s=stats.time_to_best_s,
        iterations=stats.iterations,
        simulator_calls=stats.simulator_calls,
        tested_solutions=stats.tested_solutions,
        feasible_fraction=stats.feasible_fraction,
        feasible_tested=stats.feasible_tested,
    )


def _run_packed(args):
    return _run_task(*args)


def run_experiment(plan: ExperimentPlan, jobs: int = 1) -> Iterator[RunRecord]:
    """One record per (instance, limit, seed, variant), yielded in that sorted order."""
    work = [(plan, task) for task in plan.tasks()]
    if jobs <= 1:
        yield from map(_run_packed, work)
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        yield from pool.map(_run_packed, work)

# -----------------------------------------------
# summary tables
# -----------------------------------------------
@dataclass
class Summary:
    per_variant: pd.DataFrame
    gains: Optional[pd.DataFrame]
    notes: list = field(default_factory=list)

    def to_text(self) -> str:
        parts = [self.per_variant.to_string(index=False)]
        if self.gains is not None:
            parts.append(self.gains.to_string(index=False))
        parts += [f"note: {n}" for n in self.notes]
        return "\n\n".join(parts)


def gain_pct(z_a, z_b):
    """Percent by which A is cheaper than B."""
    return 100.0 * (z_b - z_a) / z_b


def _check_pairing(df: pd.DataFrame):
    runs = {variant: frozenset(zip(g["instance_id"], g["time_limit_s"], g["seed"]))
            for variant, g in df.groupby("variant")}
    first = min(runs)
    reference = runs[first]
    for variant, keys in runs.items():
        if keys != reference:
            missing = sorted(reference ^ keys)[:3]
            raise PairingError(f"variant {variant!r} does not cover the same runs "
                               f"as {first!r}, e.g. {missing}")


def summarize(records: Iterable[RunRecord], baseline: Optional[str] = None) -> Summary:
    df = records_frame(records)
    notes = []
    failed = df["error"].notna()
    if failed.any():
        notes.append(f"{int(failed.sum())} failed runs left out")
        logger.warning("summary skips %d failed runs", int(failed.sum()))
        df = df[~failed]
    if df.empty:
        raise PairingError("no successful run records to summarize")
    df = df.astype({"best_cost": float})

    keys = ["instance_id", "time_limit_s", "variant"]
    per_variant = (df.groupby(keys)
                     .agg(best_cost=("best_cost", "min"), avg_cost=("best_cost", "mean"),
                          **{name: (name, "mean") for name in INDICATORS})
                     .reset_index())
    best_known = df.groupby("instance_id")["best_cost"].min()
    z_best = per_variant["instance_id"].map(best_known)
    per_variant["deviation_pct"] = 100.0 * (per_variant["best_cost"] - z_best) / z_best
    per_variant["avg_deviation_pct"] = 100.0 * (per_variant["avg_cost"] - z_best) / z_best

    variants = sorted(df["variant"].unique())
    if len(variants) < 2:
        notes.append("gains need at least two variants; only deviations reported")
        return Summary(per_variant, None, notes)

    _check_pairing(df)
    if baseline is None:
        baseline = Variant.BASE.value if Variant.BASE.value in variants else variants[0]
    if baseline not in variants:
        raise PairingError(f"baseline variant {baseline!r} has no records")

    wide = per_variant.pivot_table(index=["instance_id", "time_limit_s"], columns="variant",
                                   values=["best_cost", "avg_cost"])
    rows = []
    for limit, block in wide.groupby(level="time_limit_s"):
        for variant in variants:
            if variant == baseline:
                continue
            a_best, b_best = block[("best_cost", variant)], block[("best_cost", baseline)]
            a_avg, b_avg = block[("avg_cost", variant)], block[("avg_cost", baseline)]
            rows.append({
                "time_limit_s": limit,
                "variant": variant,
                "baseline": baseline,
                "gain_best_pct": gain_pct(a_best, b_best).mean(),
                "gain_avg_pct": gain_pct(a_avg, b_avg).mean(),
                "improved_best": int((a_best < b_best).sum()),
                "improved_avg": int((a_avg < b_avg).sum()),
                "instances": len(block),
            })
    return Summary(per_variant, pd.DataFrame(rows), notes)
