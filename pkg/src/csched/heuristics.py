"""List-scheduling heuristics: HEFT and OLB, restricted to the nodes each
task can actually run on."""

from __future__ import annotations

import heapq
import time

import numpy as np

from . import kernels
from .engine import schedule_from_vector
from .errors import Infeasible
from .exact import require_feature_nodes
from .model import INF, Instance, SolveResult, Status, Workflow, id_key
from .problem import Problem

RankTable = dict


def _require_hosts(problem: Problem):
    require_feature_nodes(problem)
    for j in range(problem.n):
        if not problem.allowed[j].any():
            raise Infeasible(problem.task_ids[j], "no node with enough capacity")


def _mean_inverse_rate(problem: Problem) -> float:
    """Average of 1/rate over ordered pairs of distinct nodes."""
    m = problem.m
    if m < 2:
        return 0.0
    if problem.has_rates:
        inv = 1.0 / problem.rate_matrix
        np.fill_diagonal(inv, 0.0)
        return float(inv.sum() / (m * (m - 1)))
    # pair rate is the slower endpoint: the i-th slowest node is the
    # bottleneck for every pair it forms with a faster-or-equal node
    r = np.sort(problem.dtr)
    weights = (m - 1 - np.arange(m)).astype(np.float64)
    return float(2.0 * np.sum(weights / r) / (m * (m - 1)))


def upward_ranks(problem: Problem) -> np.ndarray:
    n = problem.n
    mean_dur = np.zeros(n)
    d = problem.duration_matrix()
    for j in range(n):
        mask = problem.allowed[j].astype(bool)
        mean_dur[j] = d[j, mask].mean() if mask.any() else d[j].mean()
    inv_rate = _mean_inverse_rate(problem)
    edge_cost = np.where(problem.edge_fixed >= 0, problem.edge_fixed, problem.edge_data * inv_rate)
    rank = mean_dur.copy()
    best_tail = np.zeros(n)
    for j in range(n - 1, -1, -1):
        rank[j] = mean_dur[j] + best_tail[j]
        for e in range(problem.pred_ptr[j], problem.pred_ptr[j + 1]):
            q = problem.pred_idx[e]
            tail = edge_cost[e] + rank[j]
            if tail > best_tail[q]:
                best_tail[q] = tail
    return rank


def rank_table(instance: Instance, workflow: Workflow) -> RankTable:
    problem = Problem(instance, workflow)
    ranks = upward_ranks(problem)
    return {t: float(r) for t, r in zip(problem.task_ids, ranks)}


def _usage_row(problem: Problem, j: int) -> np.ndarray:
    return problem.use_base[j] * problem.use_factor


def _pick(values: np.ndarray, cands: np.ndarray, problem: Problem, tie=None) -> int:
    """Smallest value; ties by larger ``tie`` score, then ascending node id."""
    v = values[cands]
    best = v.min()
    hits = cands[v == best]
    if tie is not None and len(hits) > 1:
        t = tie[hits]
        hits = hits[t == t.max()]
    return int(hits[np.argmin(problem.node_rank[hits])])


def solve_heft(instance: Instance, workflow: Workflow, problem: Problem = None) -> SolveResult:
    """Heterogeneous Earliest Finish Time.

    Tasks go in descending upward rank (ties by id, never ahead of a
    predecessor); each lands on the allowed node with the earliest finish.
    Equal finish times prefer the node that the most immediate successors
    could also use, which avoids needless transfers, then the lowest id.
    """
    t0 = time.perf_counter()
    problem = problem or Problem(instance, workflow)
    _require_hosts(problem)
    n = problem.n
    ranks = upward_ranks(problem)
    tl = kernels.Timeline(problem)
    agg = np.zeros(problem.m)
    vec = np.zeros(n, dtype=np.int64)
    indeg = np.diff(problem.pred_ptr).astype(np.int64)
    keys = [id_key(t) for t in problem.task_ids]
    heap = [(-ranks[j], keys[j], j) for j in range(n) if indeg[j] == 0]
    heapq.heapify(heap)
    allowed = problem.allowed.astype(bool)
    while heap:
        _, _, j = heapq.heappop(heap)
        cands = np.flatnonzero(allowed[j])
        if problem.mode == 1:
            u = _usage_row(problem, j)
            cands = cands[agg[cands] + u[cands] <= problem.cap_cores[cands]]
            if len(cands) == 0:
                return SolveResult("heft", Status.INFEASIBLE, wall_time=time.perf_counter() - t0)
        eft = tl.eft_row(j)
        succ = problem.successors[j]
        affinity = allowed[succ].sum(axis=0) if succ else None
        k = _pick(eft, cands, problem, affinity)
        tl.place(j, k)
        agg[k] += problem.use_base[j] * problem.use_factor[k]
        vec[j] = k
        for s in succ:
            indeg[s] -= 1
            if indeg[s] == 0:
                heapq.heappush(heap, (-ranks[s], keys[s], s))
    schedule = schedule_from_vector(problem, vec)
    return SolveResult("heft", Status.FEASIBLE, schedule, schedule.objective, 0, time.perf_counter() - t0)


def olb_vector(problem: Problem):
    """OLB assignment vector, or None when aggregate capacity runs out."""
    tl = kernels.Timeline(problem)
    agg = np.zeros(problem.m)
    vec = np.zeros(problem.n, dtype=np.int64)
    allowed = problem.allowed.astype(bool)
    for j in range(problem.n):
        cands = np.flatnonzero(allowed[j])
        if problem.mode == 1:
            u = _usage_row(problem, j)
            cands = cands[agg[cands] + u[cands] <= problem.cap_cores[cands]]
        if len(cands) == 0:
            return None
        k = _pick(tl.start_row(j), cands, problem)
        tl.place(j, k)
        agg[k] += problem.use_base[j] * problem.use_factor[k]
        vec[j] = k
    return vec


def solve_olb(instance: Instance, workflow: Workflow, problem: Problem = None) -> SolveResult:
    """Opportunistic Load Balancing: each task, in topological order, goes to
    the allowed node where it could start soonest, whatever its run time."""
    t0 = time.perf_counter()
    problem = problem or Problem(instance, workflow)
    _require_hosts(problem)
    vec = olb_vector(problem)
    if vec is None:
        return SolveResult("olb", Status.INFEASIBLE, wall_time=time.perf_counter() - t0)
    schedule = schedule_from_vector(problem, vec)
    return SolveResult("olb", Status.FEASIBLE, schedule, schedule.objective, 0, time.perf_counter() - t0)
