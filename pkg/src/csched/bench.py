"""Benchmark suites.

``quality`` runs the seven-workflow roster at speed factors A (1x) and
B (2x) with every technique and reports each makespan next to the exact
one. ``scale`` times the technique families on synthetic N x T instances.

Both write CSV rows sorted by their key columns, with floats printed at
six decimals. Rows whose result depends on how far a time budget got
(status ``timeout``) leave makespan, objective and gap empty, so a repeat
run with the same seed gives the same file apart from ``wall_time``.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .catalog import quality_cases
from .errors import SchedError
from .ingest import SyntheticSpec, generate_synthetic
from .model import Instance, Status
from .solvers import METAHEURISTICS, run_technique

QUALITY_TECHNIQUES = ("milp", "heft", "olb", "ga", "sa", "pso", "aco")
SPEED_FACTORS = (("A", 1.0), ("B", 2.0))
SCALE_SIZES = (5, 50, 500)
# population methods keep n x m state per member; past this they are skipped
MH_SIZE_LIMIT = 500

COLUMNS = ("suite", "case", "nodes", "tasks", "speed", "technique", "status",
           "makespan", "objective", "gap", "substitute", "wall_time")


@dataclass(frozen=True)
class Cell:
    suite: str
    case: str
    speed: str
    technique: str
    instance: Instance
    budget: float = None
    substitute: bool = False


def _f(x):
    return "" if x is None else f"{x:.6f}"


def _run(cell: Cell, seed: int) -> dict:
    wf = cell.instance.workflows[0]
    row = {"suite": cell.suite, "case": cell.case, "nodes": len(cell.instance.nodes),
           "tasks": len(wf.tasks), "speed": cell.speed, "technique": cell.technique,
           "substitute": "yes" if cell.substitute else "no"}
    try:
        r = run_technique(cell.technique, cell.instance, wf, seed=seed, time_budget=cell.budget)
    except SchedError as exc:
        row.update(status=f"error:{type(exc).__name__}", wall_time=0.0)
        return row
    row.update(status=r.status.value, wall_time=r.wall_time)
    if r.schedule is not None and r.status is not Status.TIMEOUT:
        row.update(makespan=r.makespan, objective=r.objective)
    return row


def _execute(cells, seed, workers):
    if workers <= 1:
        rows = [_run(c, seed) for c in cells]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda c: _run(c, seed), cells))
    # gap against the exact makespan of the same case and speed
    exact = {(r["case"], r["speed"]): r.get("makespan") for r in rows
             if r["technique"] == "milp" and r["status"] == "optimal"}
    for r in rows:
        ref = exact.get((r["case"], r["speed"]))
        if ref and r.get("makespan") is not None:
            r["gap"] = r["makespan"] / ref - 1.0
    return rows


def quality_cells(exact_budget=60.0, mh_budget=None, techniques=QUALITY_TECHNIQUES):
    cells = []
    for case in quality_cases():
        for speed, factor in SPEED_FACTORS:
            inst = case.instance(factor)
            for t in techniques:
                budget = exact_budget if t == "milp" else mh_budget if t in METAHEURISTICS else None
                cells.append(Cell("quality", case.label, speed, t, inst, budget, case.substitute))
    return cells


def scale_cells(sizes=SCALE_SIZES, exact_budget=10.0, mh_budget=None, techniques=QUALITY_TECHNIQUES,
                seed=1):
    cells = []
    for size in sizes:
        nodes, wf = generate_synthetic(SyntheticSpec(size, size, seed=seed))
        inst = Instance(nodes, (wf,))
        for t in techniques:
            budget = exact_budget if t == "milp" else mh_budget if t in METAHEURISTICS else None
            cells.append(Cell("scale", f"{size}x{size}", "A", t, inst, budget))
    return cells


def run_quality(seed=42, workers=1, exact_budget=60.0, mh_budget=None, techniques=QUALITY_TECHNIQUES):
    return _execute(quality_cells(exact_budget, mh_budget, techniques), seed, workers)


def run_scale(sizes=SCALE_SIZES, seed=42, workers=1, exact_budget=10.0, mh_budget=None,
              techniques=QUALITY_TECHNIQUES):
    cells = scale_cells(sizes, exact_budget, mh_budget, techniques)
    too_big = [c.technique in METAHEURISTICS and len(c.instance.workflows[0].tasks) > MH_SIZE_LIMIT
               for c in cells]
    rows = _execute([c for c, skip in zip(cells, too_big) if not skip], seed, workers)
    for c, skip in zip(cells, too_big):
        if skip:
            rows.append({"suite": c.suite, "case": c.case, "nodes": len(c.instance.nodes),
                         "tasks": len(c.instance.workflows[0].tasks), "speed": c.speed,
                         "technique": c.technique, "status": "skipped", "substitute": "no",
                         "wall_time": 0.0})
    return rows


def _sort_key(row):
    return (row["suite"], row["nodes"], row["tasks"], row["case"], row["speed"], row["technique"])


def to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in sorted(rows, key=_sort_key):
        w.writerow([
            r["suite"], r["case"], r["nodes"], r["tasks"], r["speed"], r["technique"], r["status"],
            _f(r.get("makespan")), _f(r.get("objective")), _f(r.get("gap")), r["substitute"],
            _f(r.get("wall_time")),
        ])
    return buf.getvalue()
