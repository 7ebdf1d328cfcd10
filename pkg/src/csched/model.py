"""Domain types and the elementary per-task / per-node formulas.

Units are fixed across the package: seconds, GB for data and storage,
GiB for memory, integer cores, GB/s for data transfer rates and abstract
work-units per second for processing speed.
"""

from __future__ import annotations

import heapq
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Sequence

from .errors import (
    CycleDetected,
    MissingDuration,
    UnknownDependency,
    ZeroCapacity,
    ZeroTotalCapacity,
)

INF = math.inf

_DIGITS = re.compile(r"(\d+)")


def id_key(ident: str):
    """Natural sort key: ``N2`` sorts before ``N10``."""
    parts = _DIGITS.split(ident)
    return tuple((0, int(p), p) if p.isdigit() else (1, 0, p) for p in parts if p != "") + (
        (2, 0, ident),
    )


class UsageMode(str, Enum):
    REQUESTED = "requested"
    SCALED = "scaled"


class CapacityMode(str, Enum):
    CONCURRENT = "concurrent"
    AGGREGATE = "aggregate"
    OFF = "off"


RESOURCES = ("cores", "memory", "storage")


@dataclass(frozen=True)
class Node:
    id: str
    cores: int
    memory: float = INF
    storage: float = INF
    features: frozenset = frozenset()
    processing_speed: float = 1.0
    data_transfer_rate: float = 100.0

    def __post_init__(self):
        object.__setattr__(self, "features", frozenset(self.features))
        if not self.processing_speed > 0:
            raise ValueError(f"node {self.id}: processing_speed must be positive")
        if not self.data_transfer_rate > 0:
            raise ValueError(f"node {self.id}: data_transfer_rate must be positive")
        for name in RESOURCES:
            if getattr(self, name) < 0:
                raise ValueError(f"node {self.id}: {name} must be non-negative")


@dataclass(frozen=True)
class Task:
    """A workflow step.

    ``durations`` is either None, a single value applied to every node, or
    one value per node in cluster order. ``work`` is used (divided by the
    node speed) only when ``durations`` is None. ``transfer_costs`` maps a
    predecessor id to a fixed cross-node transfer time in seconds, replacing
    the data/rate computation for that edge.
    """

    id: str
    cores: int = 0
    memory: float = 0.0
    data_out: float = 0.0
    features: frozenset = frozenset()
    durations: Optional[tuple] = None
    work: Optional[float] = None
    dependencies: tuple = ()
    transfer_costs: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "features", frozenset(self.features))
        object.__setattr__(self, "dependencies", tuple(self.dependencies))
        if self.durations is not None:
            durs = tuple(float(d) for d in self.durations)
            if not durs or any(d < 0 for d in durs):
                raise ValueError(f"task {self.id}: durations must be non-empty and >= 0")
            object.__setattr__(self, "durations", durs)
        if self.work is not None and self.work < 0:
            raise ValueError(f"task {self.id}: work must be non-negative")
        for name in ("cores", "memory", "data_out"):
            if getattr(self, name) < 0:
                raise ValueError(f"task {self.id}: {name} must be non-negative")
        object.__setattr__(self, "transfer_costs", dict(self.transfer_costs))

    def request(self, resource: str) -> float:
        if resource == "storage":
            return self.data_out
        return getattr(self, resource)


@dataclass(frozen=True)
class Workflow:
    id: str
    tasks: tuple = ()
    submission_time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "tasks", tuple(self.tasks))
        if self.submission_time < 0:
            raise ValueError(f"workflow {self.id}: submission_time must be non-negative")

    @property
    def task_map(self) -> dict:
        return {t.id: t for t in self.tasks}


@dataclass(frozen=True)
class Instance:
    nodes: tuple
    workflows: tuple = ()
    usage_mode: UsageMode = UsageMode.REQUESTED
    capacity_mode: CapacityMode = CapacityMode.CONCURRENT
    alpha: float = 1.0
    beta: float = 1.0
    # (node_a, node_b) -> GB/s; overrides the bottleneck rule for that pair
    rates: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "workflows", tuple(self.workflows))
        object.__setattr__(self, "usage_mode", UsageMode(self.usage_mode))
        object.__setattr__(self, "capacity_mode", CapacityMode(self.capacity_mode))
        object.__setattr__(self, "rates", dict(self.rates))
        if self.alpha < 0 or self.beta < 0 or not (self.alpha + self.beta > 0):
            raise ValueError("alpha and beta must be non-negative with a positive sum")
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ValueError("node ids must be unique")

    def node_index(self, node_id: str) -> int:
        for i, n in enumerate(self.nodes):
            if n.id == node_id:
                return i
        raise KeyError(node_id)

    def with_speed_factor(self, factor: float) -> "Instance":
        nodes = [
            Node(n.id, n.cores, n.memory, n.storage, n.features,
                 n.processing_speed * factor, n.data_transfer_rate)
            for n in self.nodes
        ]
        return Instance(nodes, self.workflows, self.usage_mode, self.capacity_mode,
                        self.alpha, self.beta, self.rates)


@dataclass(frozen=True)
class ScheduleEntry:
    task_id: str
    node_id: str
    start: float
    finish: float
    usage: float


@dataclass(frozen=True)
class Schedule:
    workflow_id: str
    entries: tuple
    makespan: float
    total_usage: float
    objective: float

    @property
    def assignment(self) -> dict:
        return {e.task_id: e.node_id for e in self.entries}

    def entry(self, task_id: str) -> ScheduleEntry:
        for e in self.entries:
            if e.task_id == task_id:
                return e
        raise KeyError(task_id)


class Status(str, Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"
    TIMEOUT = "timeout"
    INFEASIBLE = "infeasible"


@dataclass
class SolveResult:
    technique: str
    status: Status
    schedule: Optional[Schedule] = None
    objective: float = INF
    explored_nodes: int = 0
    wall_time: float = 0.0
    trace: list = field(default_factory=list)  # best fitness per iteration (metaheuristics)

    @property
    def makespan(self) -> float:
        return self.schedule.makespan if self.schedule is not None else INF

    @property
    def assignment(self) -> dict:
        return self.schedule.assignment if self.schedule is not None else {}


# ---------------------------------------------------------------------------
# operations


def validate_workflow(workflow: Workflow) -> list:
    """Return the task ids in topological order.

    Ties between ready tasks go to the smallest id (natural ordering).
    """
    ids = [t.id for t in workflow.tasks]
    if len(set(ids)) != len(ids):
        raise ValueError(f"workflow {workflow.id}: duplicate task ids")
    known = set(ids)
    indeg = {i: 0 for i in ids}
    succs = {i: [] for i in ids}
    for t in workflow.tasks:
        for d in t.dependencies:
            if d not in known:
                raise UnknownDependency(workflow.id, t.id, d)
            if d == t.id:
                raise CycleDetected(workflow.id, [t.id])
            indeg[t.id] += 1
            succs[d].append(t.id)
    heap = [(id_key(i), i) for i in ids if indeg[i] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        _, cur = heapq.heappop(heap)
        order.append(cur)
        for s in succs[cur]:
            indeg[s] -= 1
            if indeg[s] == 0:
                heapq.heappush(heap, (id_key(s), s))
    if len(order) != len(ids):
        remaining = {i for i in ids if indeg[i] > 0}
        raise CycleDetected(workflow.id, _find_cycle(workflow, remaining))
    return order


def _find_cycle(workflow: Workflow, remaining: set) -> list:
    # walk predecessors inside the residual graph; every residual task has one
    preds = {t.id: [d for d in t.dependencies if d in remaining]
             for t in workflow.tasks if t.id in remaining}
    cur = min(remaining, key=id_key)
    seen = {}
    path = []
    while cur not in seen:
        seen[cur] = len(path)
        path.append(cur)
        cur = min(preds[cur], key=id_key)
    cycle = path[seen[cur]:]
    cycle.reverse()
    return cycle


def allocation_ratio(task: Task, node: Node, resource: str) -> float:
    if resource not in RESOURCES:
        raise ValueError(f"unknown resource {resource!r}")
    req = task.request(resource)
    cap = getattr(node, resource)
    if req == 0:
        return 0.0
    if cap == 0:
        raise ZeroCapacity(f"node {node.id} has zero {resource} but task {task.id} requests {req}")
    return req / cap


def fits_alone(task: Task, node: Node) -> bool:
    """Every per-resource allocation ratio is at most 1."""
    for r in RESOURCES:
        try:
            if allocation_ratio(task, node, r) > 1:
                return False
        except ZeroCapacity:
            return False
    return True


def feature_feasible(task: Task, node: Node) -> bool:
    return task.features <= node.features


def compute_duration(task: Task, node_index: int, node: Node) -> float:
    if task.durations is not None:
        if len(task.durations) == 1:
            return task.durations[0]
        return task.durations[node_index]
    if task.work is None:
        raise MissingDuration(f"task {task.id} has neither durations nor work")
    return task.work / node.processing_speed


def pair_rate(node_a: Node, node_b: Node, rates: Optional[Mapping] = None) -> float:
    if rates:
        r = rates.get((node_a.id, node_b.id))
        if r is None:
            r = rates.get((node_b.id, node_a.id))
        if r is not None:
            return r
    return min(node_a.data_transfer_rate, node_b.data_transfer_rate)


def transfer_time(data_gb: float, node_a: Node, node_b: Node, rates: Optional[Mapping] = None) -> float:
    if data_gb < 0:
        raise ValueError("data size must be non-negative")
    if node_a.id == node_b.id:
        return 0.0
    return data_gb / pair_rate(node_a, node_b, rates)


def resource_usage(task: Task, node: Node, all_nodes: Sequence[Node], mode=UsageMode.REQUESTED) -> float:
    mode = UsageMode(mode)
    if mode is UsageMode.REQUESTED:
        return float(task.cores)
    total = sum(n.cores for n in all_nodes)
    if total <= 0:
        raise ZeroTotalCapacity("total core capacity is zero")
    return task.cores * (node.cores / total)
