"""Bundled instances: the MRI example cluster and workflows, the STG
samples, the quality-suite roster and a random small-instance generator."""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from importlib.resources import files

from .ingest import SyntheticSpec, generate_synthetic, load_cluster, parse_stg, parse_workload
from .model import Instance, Node, Task, Workflow

# W2 placement of the hand-made reference solution; only valid with capacity_mode=off
MRI_W2_PAPER_ASSIGNMENT = {"T1": "N1", "T2": "N1", "T3": "N2", "T4": "N1"}

STGS = {
    "STGS1": ("stgs1.stg", "none"),
    "STGS2": ("stgs2.stg", "explicit"),
    "STGS3": ("stgs3.stg", "default"),
}


def data_text(name: str) -> str:
    return (files("csched") / "data" / name).read_text(encoding="utf-8")


def mri_nodes() -> list:
    return list(load_cluster(data_text("mri_cluster.json")).nodes)


def mri_workflows(work_based: bool = False) -> list:
    """W1 and W2. With ``work_based`` the uniform durations become work
    amounts, so node speed changes apply to them."""
    wfs = parse_workload(data_text("mri_workload.json"))
    if not work_based:
        return wfs
    out = []
    for wf in wfs:
        tasks = tuple(replace(t, durations=None, work=t.durations[0]) for t in wf.tasks)
        out.append(replace(wf, tasks=tasks))
    return out


def mri_instance(**kw) -> Instance:
    return Instance(mri_nodes(), mri_workflows(), **kw)


def stg_nodes() -> list:
    """Three single-core processors of different speeds, no features."""
    return [Node(f"P{k + 1}", 1, processing_speed=s) for k, s in enumerate((1.0, 1.5, 2.0))]


def stg_workflow(name: str) -> Workflow:
    fname, mode = STGS[name]
    return parse_stg(data_text(fname), comm_cost_mode=mode, workflow_id=name)


@dataclass(frozen=True)
class QualityCase:
    label: str
    nodes: tuple
    workflow: Workflow
    substitute: bool = False  # stands in for a workflow that is not published

    def instance(self, speed_factor: float = 1.0, **kw) -> Instance:
        inst = Instance(self.nodes, (self.workflow,), **kw)
        return inst if speed_factor == 1.0 else inst.with_speed_factor(speed_factor)


def quality_cases() -> list:
    mri = tuple(mri_nodes())
    w1, w2 = mri_workflows(work_based=True)
    cases = [QualityCase("W1", mri, w1), QualityCase("W2", mri, w2)]
    for label, tasks, seed in (("W3", 5, 3), ("W4", 10, 4)):
        nodes, wf = generate_synthetic(SyntheticSpec(3, tasks, edge_density=0.4, seed=seed))
        cases.append(QualityCase(label, tuple(nodes), replace(wf, id=label), substitute=True))
    stg = tuple(stg_nodes())
    for label, name in (("W5", "STGS1"), ("W6", "STGS2"), ("W7", "STGS3")):
        cases.append(QualityCase(label, stg, replace(stg_workflow(name), id=label)))
    return cases


def random_small_instance(seed: int, max_nodes: int = 3, max_tasks: int = 7) -> Instance:
    """A seed-fixed toy instance with one workflow.

    Node count, task count, feature sets, edge density, capacity and usage
    modes, pairwise rate overrides and fixed edge costs all vary with the
    seed. Every task fits, by features and by size, on the node it was
    drawn from; only aggregate budgets can make an instance infeasible.
    """
    rng = random.Random(seed)
    m = rng.randint(1, max_nodes)
    n = rng.randint(1, max_tasks)
    pool = ["F1", "F2", "F3"]
    nodes = []
    for k in range(m):
        feats = {f for f in pool if rng.random() < 0.5}
        nodes.append(Node(
            id=f"N{k + 1}",
            cores=rng.choice([2, 4, 8, 16]),
            memory=float(rng.choice([8, 16, 32])),
            storage=float(rng.choice([10, 100])),
            features=feats,
            processing_speed=rng.choice([0.5, 1.0, 2.0]),
            data_transfer_rate=rng.choice([1.0, 2.0, 10.0]),
        ))
    density = rng.choice([0.0, 0.3, 0.6, 1.0])
    work_based = rng.random() < 0.5
    tasks = []
    for j in range(n):
        host = rng.choice(nodes)
        feats = {f for f in sorted(host.features) if rng.random() < 0.6}
        deps = tuple(f"T{q + 1}" for q in range(j) if rng.random() < density)
        costs = {d: float(rng.randint(0, 4)) for d in deps if rng.random() < 0.2}
        if work_based:
            kw = {"work": float(rng.randint(1, 8))}
        else:
            kw = {"durations": tuple(float(rng.randint(1, 8)) for _ in range(m))}
        tasks.append(Task(
            id=f"T{j + 1}",
            cores=rng.randint(0, min(8, host.cores)),
            memory=float(rng.choice([x for x in (0, 4, 8, 16) if x <= host.memory])),
            data_out=float(rng.randint(0, min(12, int(host.storage)))),
            features=feats,
            dependencies=deps,
            transfer_costs=costs,
            **kw,
        ))
    rates = {}
    if m > 1 and rng.random() < 0.25:
        rates[("N1", "N2")] = rng.choice([0.5, 4.0])
    wf = Workflow(f"R{seed}", tuple(tasks), submission_time=rng.choice([0.0, 0.0, 1.5]))
    return Instance(
        nodes, (wf,),
        usage_mode=rng.choice(["requested", "scaled"]),
        capacity_mode=rng.choice(["concurrent", "concurrent", "aggregate", "off"]),
        alpha=rng.choice([0.0, 0.5, 1.0]),
        beta=rng.choice([1.0, 2.0]),
        rates=rates,
    )


def without_transfers(workflow: Workflow) -> Workflow:
    """Same DAG with every cross-node transfer made free."""
    tasks = tuple(replace(t, data_out=0.0, transfer_costs={}) for t in workflow.tasks)
    return replace(workflow, tasks=tasks)
