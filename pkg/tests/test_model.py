import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csched.errors import CycleDetected, MissingDuration, UnknownDependency, ZeroCapacity, ZeroTotalCapacity
from csched.model import (
    Instance,
    Node,
    Task,
    Workflow,
    allocation_ratio,
    compute_duration,
    feature_feasible,
    id_key,
    resource_usage,
    transfer_time,
    validate_workflow,
)


def by_id(nodes, nid):
    return next(n for n in nodes if n.id == nid)


# --- validate_workflow

def test_w1_chain_order(w1):
    assert validate_workflow(w1) == ["T1", "T2", "T3"]


def test_w2_diamond_order(w2):
    assert validate_workflow(w2) == ["T1", "T2", "T3", "T4"]


def test_mutual_dependency_is_a_cycle():
    wf = Workflow("c", [Task("A", work=1, dependencies=["B"]), Task("B", work=1, dependencies=["A"])])
    with pytest.raises(CycleDetected) as exc:
        validate_workflow(wf)
    assert set(exc.value.cycle) == {"A", "B"}


def test_self_dependency_is_a_cycle():
    with pytest.raises(CycleDetected):
        validate_workflow(Workflow("c", [Task("A", work=1, dependencies=["A"])]))


def test_unknown_dependency():
    with pytest.raises(UnknownDependency) as exc:
        validate_workflow(Workflow("u", [Task("T1", work=1, dependencies=["T9"])]))
    assert exc.value.missing == "T9"


def test_ties_use_natural_id_order():
    wf = Workflow("w", [Task(i, work=1) for i in ("T10", "T2", "T1")])
    assert validate_workflow(wf) == ["T1", "T2", "T10"]


def test_id_key_natural():
    assert sorted(["N10", "N2", "N1"], key=id_key) == ["N1", "N2", "N10"]


def _reaches(n, edges):
    # Floyd-Warshall transitive closure
    r = [[False] * n for _ in range(n)]
    for a, b in edges:
        r[a][b] = True
    for k, i, j in itertools.product(range(n), repeat=3):
        if r[i][k] and r[k][j]:
            r[i][j] = True
    return r


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 8), st.lists(st.tuples(st.integers(0, 7), st.integers(0, 7)), max_size=20))
def test_cycle_detection_matches_reachability(n, raw):
    edges = {(a % n, b % n) for a, b in raw}
    tasks = [Task(f"T{i}", work=1, dependencies=sorted({f"T{a}" for a, b in edges if b == i})) for i in range(n)]
    wf = Workflow("w", tasks)
    r = _reaches(n, edges)
    cyclic = any(r[i][i] for i in range(n))
    if cyclic:
        with pytest.raises(CycleDetected) as exc:
            validate_workflow(wf)
        # every reported task lies on a cycle
        assert all(r[int(t[1:])][int(t[1:])] for t in exc.value.cycle)
    else:
        order = validate_workflow(wf)
        pos = {t: i for i, t in enumerate(order)}
        assert sorted(order, key=id_key) == sorted((t.id for t in tasks), key=id_key)
        assert all(pos[f"T{a}"] < pos[f"T{b}"] for a, b in edges)


# --- allocation_ratio / feature_feasible

def test_allocation_ratio_paper_values(nodes, w1):
    t1, t2, _ = w1.tasks
    n1 = by_id(nodes, "N1")
    assert allocation_ratio(t1, n1, "cores") == 1.0
    assert allocation_ratio(t2, n1, "cores") == 1.5


def test_allocation_ratio_zero_request():
    assert allocation_ratio(Task("t", cores=0, work=1), Node("n", 0), "cores") == 0.0


def test_allocation_ratio_zero_capacity():
    with pytest.raises(ZeroCapacity):
        allocation_ratio(Task("t", cores=1, work=1), Node("n", 0), "cores")


def test_allocation_ratio_storage_uses_data_out():
    assert allocation_ratio(Task("t", data_out=5, work=1), Node("n", 1, storage=20), "storage") == 0.25


def test_allocation_ratio_unknown_resource():
    with pytest.raises(ValueError):
        allocation_ratio(Task("t", work=1), Node("n", 1), "gpus")


@given(st.integers(0, 64), st.integers(1, 16), st.integers(1, 128))
def test_allocation_ratio_linear(r, k, cap):
    base = allocation_ratio(Task("t", cores=r, work=1), Node("n", cap), "cores")
    scaled = allocation_ratio(Task("t", cores=k * r, work=1), Node("n", cap), "cores")
    assert scaled == pytest.approx(k * base, rel=1e-15)


def test_feature_feasible_examples(nodes, w1):
    t1, t2, _ = w1.tasks
    assert not feature_feasible(t2, by_id(nodes, "N1"))
    assert feature_feasible(t1, by_id(nodes, "N2"))
    assert feature_feasible(Task("e", work=1), Node("x", 1))


# --- compute_duration

def test_duration_explicit(nodes, w1):
    for k, n in enumerate(nodes):
        assert compute_duration(w1.tasks[0], k, n) == 3.0


def test_duration_from_work():
    assert compute_duration(Task("t", work=1024), 0, Node("n", 1, processing_speed=1024)) == 1.0
    assert compute_duration(Task("t", work=1024), 0, Node("n", 1, processing_speed=2048)) == 0.5


def test_duration_missing():
    with pytest.raises(MissingDuration):
        compute_duration(Task("t"), 0, Node("n", 1))


# subnormal quotients lose bits, so halving is only exact for normal floats
@given(st.one_of(st.just(0.0), st.floats(1e-6, 1e6)), st.floats(1e-3, 1e6))
def test_duration_homogeneous(work, speed):
    t = Task("t", work=work)
    assert compute_duration(t, 0, Node("n", 1, processing_speed=2 * speed)) == \
        compute_duration(t, 0, Node("n", 1, processing_speed=speed)) / 2


# --- transfer_time

def test_transfer_paper_values(nodes):
    n1, n2 = by_id(nodes, "N1"), by_id(nodes, "N2")
    assert transfer_time(2, n1, n2) == 0.02
    assert transfer_time(10, n1, n2) == 0.10
    assert transfer_time(123.0, n1, n1) == 0.0


def test_transfer_bottleneck_and_override():
    a, b = Node("a", 1, data_transfer_rate=10), Node("b", 1, data_transfer_rate=50)
    assert transfer_time(20, a, b) == 2.0
    assert transfer_time(20, a, b, {("b", "a"): 40.0}) == 0.5


def test_transfer_negative_data():
    with pytest.raises(ValueError):
        transfer_time(-1, Node("a", 1), Node("b", 1))


@given(st.floats(0, 1e6), st.floats(0.1, 1e3), st.floats(0.1, 1e3))
def test_transfer_symmetric(d, ra, rb):
    a, b = Node("a", 1, data_transfer_rate=ra), Node("b", 1, data_transfer_rate=rb)
    assert transfer_time(d, a, b) == transfer_time(d, b, a)
    assert transfer_time(d, a, a) == 0.0


# --- resource_usage

def test_usage_requested_total(nodes, w1):
    n2 = by_id(nodes, "N2")
    assert sum(resource_usage(t, n2, nodes, "requested") for t in w1.tasks) == 32.0


def test_usage_scaled_single_node():
    n = Node("n", 16)
    assert resource_usage(Task("t", cores=12, work=1), n, [n], "scaled") == 12.0


def test_usage_scaled_paper_cluster(nodes):
    n2 = by_id(nodes, "N2")
    assert resource_usage(Task("t", cores=12, work=1), n2, nodes, "scaled") == 12 * (48 / 2628)


def test_usage_scaled_zero_total():
    n = Node("n", 0)
    with pytest.raises(ZeroTotalCapacity):
        resource_usage(Task("t", cores=1, work=1), n, [n], "scaled")


def test_usage_requested_node_invariant(nodes):
    rng = random.Random(0)
    for _ in range(20):
        t = Task("t", cores=rng.randint(0, 64), work=1)
        assert len({resource_usage(t, n, nodes) for n in nodes}) == 1


# --- type invariants

def test_node_rejects_bad_speed():
    with pytest.raises(ValueError):
        Node("n", 1, processing_speed=0)
    with pytest.raises(ValueError):
        Node("n", 1, data_transfer_rate=-1)


def test_instance_weights_validated(nodes):
    with pytest.raises(ValueError):
        Instance(nodes, alpha=0, beta=0)
    with pytest.raises(ValueError):
        Instance(nodes + nodes)


def test_instance_speed_factor(nodes):
    fast = Instance(nodes).with_speed_factor(2.0)
    assert [n.processing_speed for n in fast.nodes] == [2.0, 2.0, 2.0]
