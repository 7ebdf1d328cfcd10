"""Assignment -> timed schedule, feasibility checks and the weighted objective.

Every solver goes through :func:`schedule_from_vector` so feasibility and
timing semantics live in one place.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional

from . import kernels
from .errors import InfeasibleAssignment, ZeroCapacity
from .model import (
    RESOURCES,
    CapacityMode,
    Instance,
    Schedule,
    ScheduleEntry,
    Workflow,
    allocation_ratio,
    feature_feasible,
    resource_usage,
    transfer_time,
    validate_workflow,
)
from .problem import Problem

Assignment = Dict[str, str]


@dataclass(frozen=True)
class Violation:
    task_id: str
    kind: str  # feature | capacity | dependency
    detail: str


@dataclass
class FeasibilityReport:
    feasible: bool = True
    violations: list = field(default_factory=list)

    def add(self, task_id, kind, detail):
        self.violations.append(Violation(task_id, kind, detail))
        self.feasible = False


def _check_total(assignment: Assignment, workflow: Workflow, instance: Instance):
    node_ids = {n.id for n in instance.nodes}
    for t in workflow.tasks:
        if t.id not in assignment:
            raise ValueError(f"task {t.id} is not assigned")
        if assignment[t.id] not in node_ids:
            raise ValueError(f"task {t.id} assigned to unknown node {assignment[t.id]!r}")


def check_feasibility(assignment: Assignment, workflow: Workflow, instance: Instance,
                      schedule: Optional[Schedule] = None) -> FeasibilityReport:
    """Static feasibility of an assignment, plus timing checks when a
    schedule is supplied.

    Concurrent mode only needs each task to fit its node on its own, since
    scheduling delays tasks until capacity frees up; passing the built
    schedule additionally verifies the time-overlap sums and dependency
    spacing.
    """
    _check_total(assignment, workflow, instance)
    report = FeasibilityReport()
    nodes = {n.id: n for n in instance.nodes}
    mode = instance.capacity_mode
    tmap = workflow.task_map
    order = validate_workflow(workflow)
    agg = {nid: 0.0 for nid in nodes}
    for tid in order:
        task = tmap[tid]
        node = nodes[assignment[tid]]
        if not feature_feasible(task, node):
            missing = sorted(task.features - node.features)
            report.add(tid, "feature", f"node {node.id} lacks {', '.join(missing)}")
        if mode is CapacityMode.OFF:
            continue
        over = []
        for r in RESOURCES:
            try:
                ratio = allocation_ratio(task, node, r)
            except ZeroCapacity:
                over.append(f"{r} (node has none)")
                continue
            if ratio > 1:
                over.append(f"{r} ratio {ratio:g}")
        if over:
            report.add(tid, "capacity", f"exceeds node {node.id}: {', '.join(over)}")
        if mode is CapacityMode.AGGREGATE:
            agg[node.id] += resource_usage(task, node, instance.nodes, instance.usage_mode)
            if agg[node.id] > node.cores:
                report.add(tid, "capacity",
                           f"aggregate usage {agg[node.id]:g} exceeds {node.cores} cores on {node.id}")
    if schedule is not None:
        _check_timing(schedule, workflow, instance, report)
    return report


def _check_timing(schedule: Schedule, workflow: Workflow, instance: Instance, report):
    nodes = {n.id: n for n in instance.nodes}
    by_task = {e.task_id: e for e in schedule.entries}
    tmap = workflow.task_map
    for t in workflow.tasks:
        e = by_task[t.id]
        if e.start < workflow.submission_time:
            report.add(t.id, "dependency", f"starts {e.start} before submission")
        for d in t.dependencies:
            pe = by_task[d]
            if pe.node_id == e.node_id:
                gap = 0.0
            elif d in t.transfer_costs:
                gap = t.transfer_costs[d]
            else:
                gap = transfer_time(tmap[d].data_out, nodes[pe.node_id], nodes[e.node_id], instance.rates)
            if e.start < pe.finish + gap:
                report.add(t.id, "dependency", f"starts {e.start} before {d} data arrives at {pe.finish + gap}")
    if instance.capacity_mode is not CapacityMode.CONCURRENT:
        return
    per_node = {}
    for e in schedule.entries:
        if e.finish > e.start:
            per_node.setdefault(e.node_id, []).append(e)
    for nid, entries in per_node.items():
        node = nodes[nid]
        for e in entries:
            # load is piecewise constant; checking every start covers all maxima
            running = [x for x in entries if x.start <= e.start < x.finish]
            cores = sum(tmap[x.task_id].cores for x in running)
            mem = sum(tmap[x.task_id].memory for x in running)
            if len(running) > 1 and (cores > node.cores or mem > node.memory):
                report.add(e.task_id, "capacity",
                           f"{cores} cores / {mem:g} GiB in use on {nid} at t={e.start:g}")


def schedule_from_vector(problem: Problem, vec) -> Schedule:
    """Time an index-encoded assignment (tasks in topological order)."""
    start, finish, _, _ = kernels.evaluate(problem, vec)
    instance = problem.instance
    entries = []
    for j, tid in enumerate(problem.task_ids):
        k = int(vec[j])
        node = problem.nodes[k]
        u = resource_usage(problem.tasks[j], node, instance.nodes, instance.usage_mode)
        entries.append(ScheduleEntry(tid, node.id, float(start[j]), float(finish[j]), u))
    makespan = max((e.finish for e in entries), default=0.0)
    total = sum(e.usage for e in entries)
    objective = instance.alpha * total + instance.beta * makespan
    return Schedule(problem.workflow.id, tuple(entries), makespan, total, objective)


def build_schedule(assignment: Assignment, workflow: Workflow, instance: Instance,
                   problem: Optional[Problem] = None, validate: bool = True) -> Schedule:
    """Earliest-start schedule for a total, feasible assignment.

    Tasks are processed in topological order; each starts once every
    predecessor has finished and its output has been transferred (free when
    co-located). Under concurrent capacity a task further waits for room on
    its node.

    ``validate=False`` skips the feasibility gate and times any total
    assignment, e.g. to replay a hand-made placement that breaks a rule.
    """
    if validate:
        report = check_feasibility(assignment, workflow, instance)
        if not report.feasible:
            raise InfeasibleAssignment(report)
    else:
        _check_total(assignment, workflow, instance)
    problem = problem or Problem(instance, workflow)
    return schedule_from_vector(problem, problem.assignment_vector(assignment))


def evaluate_objective(schedule: Schedule, instance: Instance) -> float:
    total = sum(e.usage for e in schedule.entries)
    makespan = max((e.finish for e in schedule.entries), default=0.0)
    return instance.alpha * total + instance.beta * makespan
