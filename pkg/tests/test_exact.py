import random
import time

import pytest

from csched.catalog import mri_instance, random_small_instance
from csched.engine import build_schedule, check_feasibility
from csched.errors import Infeasible
from csched.exact import SolveConfig, lower_bound, solve_exact
from csched.ingest import SyntheticSpec, generate_synthetic
from csched.model import Instance, Node, Status, Task, Workflow
from csched.oracle import brute_force_optimum


def test_w1_optimum(inst, w1):
    r = solve_exact(inst, w1)
    assert r.status is Status.OPTIMAL
    assert r.assignment == {"T1": "N2", "T2": "N2", "T3": "N2"}
    assert r.makespan == 10.0 and r.schedule.total_usage == 32.0 and r.objective == 42.0


def test_w2_optimum(inst, w2):
    r = solve_exact(inst, w2)
    assert r.makespan == 10.0 and r.schedule.total_usage == 64.0


def test_infeasible_names_task():
    wf = Workflow("w", [Task("T1", work=1), Task("T2", work=1, features={"GPU"})])
    with pytest.raises(Infeasible) as exc:
        solve_exact(Instance([Node("N1", 4)], [wf]), wf)
    assert exc.value.task_id == "T2"


def test_empty_cluster_is_infeasible(w1):
    with pytest.raises(Infeasible):
        solve_exact(Instance([], [w1]), w1)


def test_empty_workflow():
    wf = Workflow("e")
    r = solve_exact(Instance([Node("N", 1)], [wf]), wf)
    assert r.status is Status.OPTIMAL and r.makespan == 0.0


def test_capacity_infeasible_status():
    # fits by features but the aggregate budget cannot hold both tasks
    wf = Workflow("w", [Task("A", cores=6, work=1), Task("B", cores=6, work=1)])
    inst = Instance([Node("N1", 8)], [wf], capacity_mode="aggregate")
    r = solve_exact(inst, wf)
    assert r.status is Status.INFEASIBLE and r.schedule is None


def test_determinism_including_stats():
    nodes, wf = generate_synthetic(SyntheticSpec(4, 9, seed=3))
    inst = Instance(nodes, [wf])
    a, b = solve_exact(inst, wf), solve_exact(inst, wf)
    assert (a.objective, a.assignment, a.explored_nodes) == (b.objective, b.assignment, b.explored_nodes)


def test_timeout_returns_incumbent():
    nodes, wf = generate_synthetic(SyntheticSpec(50, 50, seed=1))
    t0 = time.perf_counter()
    r = solve_exact(Instance(nodes, [wf]), wf, SolveConfig(time_budget=0.3))
    assert time.perf_counter() - t0 < 2.0
    assert r.status is Status.TIMEOUT
    assert r.schedule is not None


def test_config_validation():
    with pytest.raises(ValueError):
        SolveConfig(time_budget=0)
    with pytest.raises(ValueError):
        SolveConfig(node_tie_break="descending")


def test_record_stats_off(inst, w1):
    assert solve_exact(inst, w1, SolveConfig(record_stats=False)).explored_nodes == 0


def test_lower_bound_examples(inst, w1):
    assert lower_bound({}, w1, inst) <= 42.0
    full = {"T1": "N2", "T2": "N2", "T3": "N2"}
    assert lower_bound(full, w1, inst) == 42.0


def test_lower_bound_chain_critical_path():
    k = 6
    tasks = [Task(f"T{i}", durations=(1.0, 1.0), dependencies=[f"T{i - 1}"] if i else []) for i in range(k)]
    wf = Workflow("c", tasks)
    inst = Instance([Node("A", 1), Node("B", 1)], [wf], alpha=0, beta=1)
    assert lower_bound({}, wf, inst) >= k


def _completions(inst, wf, partial, rng, count):
    ids = [t.id for t in wf.tasks]
    nodes = [n.id for n in inst.nodes]
    for _ in range(count):
        a = dict(partial)
        for tid in ids:
            a.setdefault(tid, rng.choice(nodes))
        yield a


@pytest.mark.parametrize("seed", range(60))
def test_lower_bound_admissible(seed):
    inst = random_small_instance(seed)
    wf = inst.workflows[0]
    rng = random.Random(seed)
    ids = [t.id for t in wf.tasks]
    nodes = [n.id for n in inst.nodes]
    for _ in range(5):
        # both prefix and scattered partial assignments
        if rng.random() < 0.5:
            keep = ids[:rng.randint(0, len(ids))]
        else:
            keep = [t for t in ids if rng.random() < 0.5]
        partial = {t: rng.choice(nodes) for t in keep}
        lb = lower_bound(partial, wf, inst)
        for a in _completions(inst, wf, partial, rng, 20):
            if check_feasibility(a, wf, inst).feasible:
                assert lb <= build_schedule(a, wf, inst).objective + 1e-9


@pytest.mark.parametrize("seed", range(100))
def test_matches_brute_force(seed):
    inst = random_small_instance(1000 + seed)
    wf = inst.workflows[0]
    a, b = solve_exact(inst, wf), brute_force_optimum(inst, wf)
    assert a.status is b.status
    assert a.objective == b.objective
    assert a.assignment == b.assignment  # both keep the lexicographically first optimum


@pytest.mark.parametrize("seed", range(40))
def test_infeasible_iff_no_feature_node_when_capacity_off(seed):
    inst = random_small_instance(seed)
    wf = inst.workflows[0]
    rng = random.Random(seed)
    gpu = rng.random() < 0.5
    if gpu:
        tasks = list(wf.tasks)
        tasks[0] = Task(tasks[0].id, cores=1, work=1, features={"NOPE"})
        wf = Workflow(wf.id, tasks)
    inst = Instance(inst.nodes, [wf], capacity_mode="off")
    if gpu:
        with pytest.raises(Infeasible):
            solve_exact(inst, wf)
    else:
        assert solve_exact(inst, wf).status is Status.OPTIMAL


def test_tie_break_prefers_lowest_node_id():
    wf = Workflow("w", [Task("T1", durations=(2.0,))])
    inst = Instance([Node("N10", 4), Node("N2", 4), Node("N3", 4)], [wf])
    assert solve_exact(inst, wf).assignment == {"T1": "N2"}


def test_mri_scaled_mode_prefers_small_node_usage():
    inst = mri_instance(usage_mode="scaled", alpha=1000.0, beta=1.0)
    w1 = inst.workflows[0]
    r = solve_exact(inst, w1)
    assert r.status is Status.OPTIMAL
    assert r.assignment["T1"] == "N1"  # 8 cores of the small node cost least usage
