"""Exact solver: branch-and-bound over task -> node assignments.

Once the assignment is fixed, start times follow from earliest-start
semantics, so searching assignments alone is exact. Branching visits tasks
in topological order and nodes in ascending id, which makes the returned
optimum the lexicographically smallest one among ties.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

from . import kernels
from .engine import schedule_from_vector
from .errors import Infeasible
from .model import INF, Instance, SolveResult, Status, Workflow
from .problem import Problem

__all__ = ["SolveConfig", "SolveResult", "solve_exact", "lower_bound", "require_feature_nodes"]


@dataclass(frozen=True)
class SolveConfig:
    time_budget: Optional[float] = None
    node_tie_break: str = "ascending"
    record_stats: bool = True

    def __post_init__(self):
        if self.time_budget is not None and not self.time_budget > 0:
            raise ValueError("time_budget must be positive")
        if self.node_tie_break != "ascending":
            raise ValueError("only ascending node-id tie-breaking is supported")


def require_feature_nodes(problem: Problem):
    """Raise :class:`Infeasible` for the first task no node can host by features."""
    for j in range(problem.n):
        if not problem.featok[j].any():
            raise Infeasible(problem.task_ids[j])


def solve_exact(instance: Instance, workflow: Workflow, config: Optional[SolveConfig] = None,
                problem: Optional[Problem] = None) -> SolveResult:
    config = config or SolveConfig()
    t0 = time.perf_counter()
    problem = problem or Problem(instance, workflow)
    require_feature_nodes(problem)
    deadline = None if config.time_budget is None else t0 + config.time_budget
    vec, _, explored, timed_out = kernels.branch_and_bound(problem, deadline)
    if vec is None:
        status = Status.TIMEOUT if timed_out else Status.INFEASIBLE
        return SolveResult("milp", status, None, INF, explored if config.record_stats else 0,
                           time.perf_counter() - t0)
    schedule = schedule_from_vector(problem, vec)
    status = Status.TIMEOUT if timed_out else Status.OPTIMAL
    return SolveResult("milp", status, schedule, schedule.objective,
                       explored if config.record_stats else 0, time.perf_counter() - t0)


def lower_bound(partial: dict, workflow: Workflow, instance: Instance) -> float:
    """Admissible bound on the objective of any completion of ``partial``.

    A partial assignment covering a prefix of the topological order is
    timed exactly (placements of later tasks never move earlier ones);
    otherwise assigned tasks use their real duration and transfers are
    only charged between two assigned endpoints. Unassigned tasks take
    their shortest allowed duration and smallest usage with free transfers.
    """
    problem = Problem(instance, workflow)
    n = problem.n
    assigned = [problem.task_ids[j] in partial for j in range(n)]
    if all(assigned):
        vec = problem.assignment_vector(partial)
        return schedule_from_vector(problem, vec).objective
    pos = {nid: k for k, nid in enumerate(problem.node_ids)}
    mindur, minuse = [], []
    for j in range(n):
        ks = [k for k in range(problem.m) if problem.allowed[j, k]]
        if not ks:
            return INF
        mindur.append(min(problem.duration(j, k) for k in ks))
        minuse.append(min(float(problem.use_base[j] * problem.use_factor[k]) for k in ks))

    depth = 0
    while depth < n and assigned[depth]:
        depth += 1
    prefix = not any(assigned[depth:])
    usage = 0.0
    finish = [0.0] * n
    if prefix:
        tl = kernels.Timeline(problem)
        for j in range(depth):
            k = pos[partial[problem.task_ids[j]]]
            finish[j] = tl.place(j, k)
            usage += float(problem.use_base[j] * problem.use_factor[k])
        start_at = depth
    else:
        start_at = 0
    for j in range(start_at, n):
        s = problem.release
        k = pos.get(partial.get(problem.task_ids[j]), -1)
        for e in range(problem.pred_ptr[j], problem.pred_ptr[j + 1]):
            q = int(problem.pred_idx[e])
            fq = finish[q]
            kq = pos.get(partial.get(problem.task_ids[q]), -1)
            if k >= 0 and kq >= 0 and k != kq:
                fq += _edge_transfer(problem, e, kq, k)
            s = max(s, fq)
        if k >= 0:
            finish[j] = s + problem.duration(j, k)
            usage += float(problem.use_base[j] * problem.use_factor[k])
        else:
            finish[j] = s + mindur[j]
            usage += minuse[j]
    makespan = max(finish, default=0.0)
    return problem.alpha * usage + problem.beta * makespan


def _edge_transfer(problem: Problem, e: int, a: int, b: int) -> float:
    if problem.edge_fixed[e] >= 0:
        return float(problem.edge_fixed[e])
    if problem.has_rates:
        rate = problem.rate_matrix[a, b]
    else:
        rate = min(problem.dtr[a], problem.dtr[b])
    return float(problem.edge_data[e] / rate)
