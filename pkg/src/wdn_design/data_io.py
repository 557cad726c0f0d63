"""
Readers and writers: EPANET-style instance files (a subset of the INP
format), the pipe-type catalog, solution CSVs and the newline-delimited
JSON run records produced by experiments.

Instance files are checked line by line first, so that format errors carry
a line number, and then loaded through wntr from a normalized copy that
holds only the sections this package models.
"""

import csv
import io
import json
import logging
import os
import tempfile
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Optional, TextIO

import pandas as pd
import wntr

from .config import CATALOG_ENV_VAR, DEFAULT_CATALOG_ROWS, DEFAULT_PERIOD_COUNT
from .errors import CatalogError, InstanceError, ParseError
from .network import (Demand, DemandModel, Network, Node, NodeKind, Pipe, PipeType,
                      PipeTypeCatalog, Solution, natural_key)

logger = logging.getLogger(__name__)

SECTIONS = ("TITLE", "JUNCTIONS", "RESERVOIRS", "PIPES", "PATTERNS", "DEMANDS",
            "TIMES", "OPTIONS", "COORDINATES", "END")

# SI flow units; wntr converts both to m3/s
FLOW_UNITS = ("LPS", "CMS")
DEFAULT_FLOW_UNITS = "LPS"

# [PIPES] diameter and roughness handed to wntr; the catalog decides the real ones
_PLACEHOLDER_PIPE = "100\t130\t0\tOpen"

# -----------------------------------------------
# instance files
# -----------------------------------------------
def _split_sections(text, source):
    """Section name -> list of (line number, fields); comments removed."""
    sections = {name: [] for name in SECTIONS}
    current = None
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError(f"malformed section header {line!r}", lineno, source)
            current = line[1:-1].strip().upper()
            if current not in sections:
                logger.warning("%s:%d: section [%s] not supported, skipped", source, lineno, current)
                sections[current] = []
            continue
        if current is None:
            raise ParseError("data before the first section header", lineno, source)
        if current == "TITLE":
            sections[current].append((lineno, [line]))
        else:
            sections[current].append((lineno, line.split()))
    return sections


def _number(token, what, lineno, source):
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"{what} is not a number: {token!r}", lineno, source) from None


def _need(fields_, count, what, lineno, source):
    if len(fields_) < count:
        raise ParseError(f"{what} needs at least {count} fields, got {len(fields_)}", lineno, source)


def _read_options(records, source):
    units = DEFAULT_FLOW_UNITS
    default_pattern = None
    multiplier = 1.0
    for lineno, rec in records:
        key = rec[0].upper()
        if key == "UNITS":
            _need(rec, 2, "Units option", lineno, source)
            units = rec[1].upper()
            if units not in FLOW_UNITS:
                raise ParseError(f"unknown units {rec[1]!r} (expected LPS or CMS)", lineno, source)
        elif key == "PATTERN":
            _need(rec, 2, "Pattern option", lineno, source)
            default_pattern = rec[1]
        elif key == "DEMAND" and len(rec) >= 3 and rec[1].upper() == "MULTIPLIER":
            multiplier = _number(rec[2], "demand multiplier", lineno, source)
    return units, default_pattern, multiplier


@dataclass
class _CheckedInstance:
    """What the line-by-line pass keeps for the wntr load, in file units."""
    units: str
    default_pattern: Optional[str]
    demand_multiplier: float
    title: str
    patterns: dict       # id -> multipliers
    elevations: dict     # junction id -> elevation
    categories: dict     # junction id -> [(base demand, pattern id or None)]
    heads: dict          # reservoir id -> head
    pipes: list          # (id, node1, node2, length)


def _check_instance(text, source) -> _CheckedInstance:
    """Line-aware checks; every error here names the offending line.

    A [DEMANDS] row adds a category to its junction, after the one on the
    [JUNCTIONS] row if that row has a demand column.
    """
    sections = _split_sections(text, source)
    units, default_pattern, demand_multiplier = _read_options(sections["OPTIONS"], source)

    patterns = {}
    pattern_lines = {}
    for lineno, rec in sections["PATTERNS"]:
        values = [_number(tok, f"multiplier of pattern {rec[0]}", lineno, source) for tok in rec[1:]]
        patterns.setdefault(rec[0], []).extend(values)
        pattern_lines.setdefault(rec[0], lineno)
    for pid, values in patterns.items():
        if not values:
            raise ParseError(f"pattern {pid} is empty", pattern_lines[pid], source)

    seen_nodes = {}

    def claim_node(node_id, lineno):
        if node_id in seen_nodes:
            raise ParseError(f"duplicate node id {node_id!r} (first on line {seen_nodes[node_id]})",
                             lineno, source)
        seen_nodes[node_id] = lineno

    elevations = {}
    demands = {}
    for lineno, rec in sections["JUNCTIONS"]:
        _need(rec, 2, "junction", lineno, source)
        node_id = rec[0]
        claim_node(node_id, lineno)
        elevations[node_id] = _number(rec[1], "elevation", lineno, source)
        demands[node_id] = []
        if len(rec) >= 3:
            base = _number(rec[2], "base demand", lineno, source)
            pattern = rec[3] if len(rec) >= 4 else None
            demands[node_id].append((base, pattern, lineno))

    heads = {}
    for lineno, rec in sections["RESERVOIRS"]:
        _need(rec, 2, "reservoir", lineno, source)
        claim_node(rec[0], lineno)
        heads[rec[0]] = _number(rec[1], "head", lineno, source)

    for lineno, rec in sections["DEMANDS"]:
        _need(rec, 2, "demand", lineno, source)
        if rec[0] not in elevations:
            raise ParseError(f"demand for unknown junction {rec[0]!r}", lineno, source)
        base = _number(rec[1], "base demand", lineno, source)
        pattern = rec[2] if len(rec) >= 3 else None
        demands[rec[0]].append((base, pattern, lineno))

    for node_id, cats in demands.items():
        for base, pattern, lineno in cats:
            if pattern is not None and pattern not in patterns:
                raise ParseError(f"junction {node_id} uses unknown pattern {pattern!r}", lineno, source)
            if base < 0:
                raise ParseError(f"junction {node_id} has a negative base demand", lineno, source)

    pipes = []
    seen_pipes = {}
    for lineno, rec in sections["PIPES"]:
        _need(rec, 4, "pipe", lineno, source)
        pipe_id, n1, n2 = rec[0], rec[1], rec[2]
        if pipe_id in seen_pipes:
            raise ParseError(f"duplicate pipe id {pipe_id!r} (first on line {seen_pipes[pipe_id]})",
                             lineno, source)
        seen_pipes[pipe_id] = lineno
        for end in (n1, n2):
            if end not in seen_nodes:
                raise ParseError(f"pipe {pipe_id} references unknown node {end!r}", lineno, source)
        if n1 == n2:
            raise ParseError(f"pipe {pipe_id} connects node {n1!r} to itself", lineno, source)
        length = _number(rec[3], "length", lineno, source)
        if length <= 0:
            raise ParseError(f"pipe {pipe_id} has nonpositive length {length:g}", lineno, source)
        pipes.append((pipe_id, n1, n2, length))

    return _CheckedInstance(
        units=units,
        default_pattern=default_pattern,
        demand_multiplier=demand_multiplier,
        title=" ".join(rec[0] for _, rec in sections["TITLE"]),
        patterns=patterns,
        elevations=elevations,
        categories={node_id: [(base, pattern) for base, pattern, _ in cats]
                    for node_id, cats in demands.items()},
        heads=heads,
        pipes=pipes,
    )


def _normalized_inp(checked: _CheckedInstance) -> str:
    """INP text wntr reads without surprises.

    Every demand category goes to [DEMANDS]: wntr lets the first [DEMANDS]
    row of a junction replace the [JUNCTIONS] demand, here they add up.
    """
    out = ["[JUNCTIONS]"]
    out += [f"{node_id}\t{_fmt(elev)}" for node_id, elev in checked.elevations.items()]
    out += ["", "[RESERVOIRS]"]
    out += [f"{node_id}\t{_fmt(head)}" for node_id, head in checked.heads.items()]
    out += ["", "[PIPES]"]
    out += [f"{pid}\t{n1}\t{n2}\t{_fmt(length)}\t{_PLACEHOLDER_PIPE}"
            for pid, n1, n2, length in checked.pipes]
    out += ["", "[PATTERNS]"]
    for pid, values in checked.patterns.items():
        for start in range(0, len(values), 12):
            out.append("\t".join([pid] + [_fmt(v) for v in values[start:start + 12]]))
    out += ["", "[DEMANDS]"]
    for node_id, cats in checked.categories.items():
        for base, pattern in cats:
            out.append("\t".join([node_id, _fmt(base)] + ([pattern] if pattern is not None else [])))
    out += ["", "[OPTIONS]", f"Units\t{checked.units}",
            f"Demand Multiplier\t{_fmt(checked.demand_multiplier)}", "", "[END]", ""]
    return "\n".join(out)


def _read_network(inp_text, source) -> wntr.network.WaterNetworkModel:
    with tempfile.TemporaryDirectory(prefix="wdn-design-") as tmp:
        path = Path(tmp) / "instance.inp"
        path.write_text(inp_text, encoding="utf-8")
        try:
            return wntr.network.WaterNetworkModel(str(path))
        except Exception as exc:
            raise ParseError(f"wntr could not load the network: {exc}", None, source) from exc


def parse_instance(text: str, source: str = "<input>"):
    """Parse INP text into (Network, DemandModel).

    Diameter and roughness columns of [PIPES] are read past: pipe types come
    from the catalog. [TIMES] is ignored; the period count is the longest
    pattern, or 24 without patterns.
    """
    checked = _check_instance(text, source)
    wn = _read_network(_normalized_inp(checked), source)

    nodes = []
    for name in wn.junction_name_list:
        junction = wn.get_node(name)
        listed = checked.categories[name]
        loads = [d.base_value for d in junction.demand_timeseries_list] if listed else []
        if len(loads) != len(listed):
            raise ParseError(f"junction {name}: wntr read {len(loads)} demand categories, "
                             f"expected {len(listed)}", None, source)
        nodes.append(Node(name, NodeKind.JUNCTION, float(junction.elevation),
                          demands=tuple(Demand(float(load), pattern)
                                        for load, (_, pattern) in zip(loads, listed))))
    for name in wn.reservoir_name_list:
        head = float(wn.get_node(name).base_head)
        nodes.append(Node(name, NodeKind.RESERVOIR, head, fixed_head=head))

    pipes = []
    for name in wn.pipe_name_list:
        link = wn.get_link(name)
        pipes.append(Pipe(name, (link.start_node_name, link.end_node_name), float(link.length)))

    patterns = {name: [float(v) for v in wn.get_pattern(name).multipliers]
                for name in wn.pattern_name_list}
    period_count = max((len(v) for v in patterns.values()), default=DEFAULT_PERIOD_COUNT)
    try:
        dm = DemandModel(patterns, period_count, checked.default_pattern,
                         float(wn.options.hydraulic.demand_multiplier))
        net = Network(tuple(nodes), tuple(pipes), dm, checked.title)
    except InstanceError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(str(exc), None, source) from exc
    return net, dm


def load_instance(path):
    path = Path(path)
    net, dm = parse_instance(path.read_text(encoding="utf-8"), source=str(path))
    logger.info("loaded %s: %d nodes, %d pipes, %d periods",
                path.name, len(net.nodes), len(net.pipes), dm.period_count)
    return net, dm


def _fmt(value: float) -> str:
    return repr(float(value))


def format_instance(net: Network) -> str:
    """INP text that parse_instance reads back into an equal model (CMS units)."""
    dm = net.demand_model
    out = ["[TITLE]", net.title, "", "[JUNCTIONS]", ";ID\tElev\tDemand\tPattern"]
    extra = []
    for node in net.junctions:
        row = [node.id, _fmt(node.elevation)]
        if node.demands:
            first, *rest = node.demands
            row.append(_fmt(first.base_load))
            if first.pattern_id is not None:
                row.append(first.pattern_id)
            extra += [(node.id, d) for d in rest]
        out.append("\t".join(row))

    out += ["", "[RESERVOIRS]", ";ID\tHead"]
    out += [f"{node.id}\t{_fmt(node.fixed_head)}" for node in net.reservoirs]

    out += ["", "[PIPES]", ";ID\tNode1\tNode2\tLength"]
    out += [f"{p.id}\t{p.endpoints[0]}\t{p.endpoints[1]}\t{_fmt(p.length_m)}" for p in net.pipes]

    out += ["", "[DEMANDS]"]
    for node_id, d in extra:
        row = [node_id, _fmt(d.base_load)] + ([d.pattern_id] if d.pattern_id is not None else [])
        out.append("\t".join(row))

    out += ["", "[PATTERNS]"]
    for pid in sorted(dm.patterns, key=natural_key):
        values = dm.patterns[pid]
        for start in range(0, len(values), 12):
            out.append("\t".join([pid] + [_fmt(v) for v in values[start:start + 12]]))

    out += ["", "[OPTIONS]", "Units\tCMS", f"Demand Multiplier\t{_fmt(dm.demand_multiplier)}"]
    if dm.default_pattern is not None:
        out.append(f"Pattern\t{dm.default_pattern}")
    out += ["", "[END]", ""]
    return "\n".join(out)

# -----------------------------------------------
# pipe-type catalog
# -----------------------------------------------
def _is_numeric(token):
    try:
        float(token)
    except ValueError:
        return False
    return True


def parse_type_catalog(text: str, source: str = "<catalog>") -> PipeTypeCatalog:
    rows = [(lineno, [c.strip() for c in row])
            for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1)
            if row and any(c.strip() for c in row)]
    if rows and not _is_numeric(rows[0][1][0]):
        rows = rows[1:]

    types = []
    for lineno, row in rows:
        if len(row) < 4:
            raise ParseError(f"catalog row needs 4 fields, got {len(row)}", lineno, source)
        index = _number(row[0], "type index", lineno, source)
        if not index.is_integer():
            raise ParseError(f"type index {row[0]!r} is not an integer", lineno, source)
        values = [_number(c, name, lineno, source)
                  for c, name in zip(row[1:4], ("diameter", "roughness", "unit cost"))]
        try:
            t = PipeType(int(index), *values)
        except CatalogError as exc:
            raise ParseError(str(exc), lineno, source) from exc
        if types and (t.diameter_mm, t.roughness, t.unit_cost) == \
                (types[-1].diameter_mm, types[-1].roughness, types[-1].unit_cost):
            logger.warning("%s:%d: type %d repeats type %d; both kept",
                           source, lineno, t.index, types[-1].index)
        types.append(t)
    return PipeTypeCatalog(tuple(types))


def default_catalog() -> PipeTypeCatalog:
    return PipeTypeCatalog(tuple(PipeType(*row) for row in DEFAULT_CATALOG_ROWS))


def load_catalog(path=None) -> PipeTypeCatalog:
    """Catalog from path, else from the file named by the environment, else built in."""
    if path is None:
        path = os.environ.get(CATALOG_ENV_VAR) or None
    if path is None:
        return default_catalog()
    path = Path(path)
    return parse_type_catalog(path.read_text(encoding="utf-8"), source=str(path))

# -----------------------------------------------
# solutions
# -----------------------------------------------
def read_solution(text: str, source: str = "<solution>") -> Solution:
    rows = [(lineno, [c.strip() for c in row])
            for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1)
            if row and any(c.strip() for c in row)]
    # header: a first row whose type cell is not a number
    if rows and len(rows[0][1]) >= 2 and not _is_numeric(rows[0][1][1]):
        rows = rows[1:]
    assignment = {}
    for lineno, row in rows:
        if len(row) < 2:
            raise ParseError("solution row needs pipe_id,type", lineno, source)
        pipe_id, t = row[0], _number(row[1], "type", lineno, source)
        if not t.is_integer():
            raise ParseError(f"type {row[1]!r} is not an integer", lineno, source)
        if pipe_id in assignment:
            raise ParseError(f"pipe {pipe_id!r} assigned twice", lineno, source)
        assignment[pipe_id] = int(t)
    return Solution(assignment)


def format_solution(S: Solution) -> str:
    lines = ["pipe_id,type"]
    lines += [f"{pid},{S[pid]}" for pid in sorted(S, key=natural_key)]
    return "\n".join(lines) + "\n"

# -----------------------------------------------
# run records
# -----------------------------------------------
@dataclass(frozen=True)
class RunRecord:
    instance_id: str
    seed: int
    time_limit_s: float
    variant: str
    best_cost: Optional[float]
    time_to_best_s: float
    iterations: int
    simulator_calls: int
    tested_solutions: int
    feasible_fraction: float
    feasible_tested: int = 0
    error: Optional[str] = None

    def __post_init__(self):
        if not 0.0 <= self.feasible_fraction <= 1.0:
            raise ValueError(f"feasible_fraction {self.feasible_fraction} outside [0, 1]")
        for name in ("iterations", "simulator_calls", "tested_solutions", "feasible_tested"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    @classmethod
    def failed(cls, instance_id, seed, time_limit_s, variant, error):
        return cls(instance_id, seed, time_limit_s, variant, None, 0.0, 0, 0, 0, 0.0, 0, error)


RECORD_FIELDS = tuple(f.name for f in fields(RunRecord))


def _compact(value):
    # integral floats are written as ints: "best_cost":0
    if isinstance(value, float) and value.is_integer():
        return int(value)
    return value


def write_run_record(rec: RunRecord, sink: TextIO):
    data = asdict(rec)
    line = json.dumps({name: _compact(data[name]) for name in RECORD_FIELDS},
                      separators=(",", ":"))
    sink.write(line + "\n")
    sink.flush()


def read_run_records(lines: Iterable[str], source: str = "<records>") -> list:
    records = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            data = json.loads(line)
            rec = RunRecord(
                instance_id=str(data["instance_id"]),
                seed=int(data["seed"]),
                time_limit_s=float(data["time_limit_s"]),
                variant=str(data["variant"]),
                best_cost=None if data["best_cost"] is None else float(data["best_cost"]),
                time_to_best_s=float(data["time_to_best_s"]),
                iterations=int(data["iterations"]),
                simulator_calls=int(data["simulator_calls"]),
                tested_solutions=int(data["tested_solutions"]),
                feasible_fraction=float(data["feasible_fraction"]),
                feasible_tested=int(data.get("feasible_tested", 0)),
                error=data.get("error"),
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise ParseError(f"bad run record: {exc}", lineno, source) from None
        records.append(rec)
    return records


def records_frame(records: Iterable[RunRecord]) -> pd.DataFrame:
    return pd.DataFrame([asdict(r) for r in records], columns=list(RECORD_FIELDS))
