"""Brute-force reference solver.

Enumerates every total assignment and times each one with its own naive
code. Nothing here is imported from the engine, the problem compiler or
the kernels, so agreement with the exact solver is real evidence.
"""

from __future__ import annotations

import itertools
import re
import time

from .errors import Infeasible, TooLarge
from .model import Instance, Schedule, ScheduleEntry, SolveResult, Status, Workflow

MAX_ASSIGNMENTS = 10 ** 6


def _natural(s):
    return [(0, int(p), "") if p.isdigit() else (1, 0, p) for p in re.split(r"(\d+)", s) if p] + [(2, 0, s)]


def _topo(workflow):
    done, order = set(), []
    pending = list(workflow.tasks)
    while pending:
        ready = [t for t in pending if all(d in done for d in t.dependencies)]
        if not ready:
            raise ValueError("cyclic workflow")
        t = min(ready, key=lambda x: _natural(x.id))
        order.append(t)
        done.add(t.id)
        pending.remove(t)
    return order


def _duration(task, k, node):
    if task.durations is not None:
        return task.durations[0] if len(task.durations) == 1 else task.durations[k]
    return task.work / node.processing_speed


def _xfer(instance, producer, consumer, a, b):
    if a.id == b.id:
        return 0.0
    if producer.id in consumer.transfer_costs:
        return consumer.transfer_costs[producer.id]
    rate = instance.rates.get((a.id, b.id), instance.rates.get((b.id, a.id)))
    if rate is None:
        rate = a.data_transfer_rate if a.data_transfer_rate <= b.data_transfer_rate else b.data_transfer_rate
    return producer.data_out / rate


def _usage(instance, task, node):
    if instance.usage_mode.value == "requested":
        return float(task.cores)
    return task.cores * (node.cores / sum(n.cores for n in instance.nodes))


def _fits(task, node):
    for req, cap in ((task.cores, node.cores), (task.memory, node.memory), (task.data_out, node.storage)):
        if req == 0:
            continue
        if cap == 0 or req / cap > 1:
            return False
    return True


def _feasible(instance, tasks, nodes_of):
    mode = instance.capacity_mode.value
    load = {}
    for t in tasks:
        node = nodes_of[t.id]
        if not t.features <= node.features:
            return False
        if mode == "off":
            continue
        if not _fits(t, node):
            return False
        if mode == "aggregate":
            load[node.id] = load.get(node.id, 0.0) + _usage(instance, t, node)
            if load[node.id] > node.cores:
                return False
    return True


def _time_recursive(instance, workflow, tasks, nodes_of, kidx):
    by_id = {t.id: t for t in tasks}
    finish = {}

    def fin(tid):
        if tid not in finish:
            t = by_id[tid]
            s = workflow.submission_time
            for d in t.dependencies:
                s = max(s, fin(d) + _xfer(instance, by_id[d], t, nodes_of[d], nodes_of[tid]))
            finish[tid] = (s, s + _duration(t, kidx[tid], nodes_of[tid]))
        return finish[tid][1]

    for t in tasks:
        fin(t.id)
    return finish


def _time_sequential(instance, workflow, tasks, nodes_of, kidx):
    """Concurrent capacity: tasks in order, each at the first instant from its
    data-ready time where its node has room for the whole run."""
    by_id = {t.id: t for t in tasks}
    times = {}
    running = {}
    for t in tasks:
        node = nodes_of[t.id]
        ready = workflow.submission_time
        for d in t.dependencies:
            ready = max(ready, times[d][1] + _xfer(instance, by_id[d], t, nodes_of[d], node))
        dur = _duration(t, kidx[t.id], node)
        slots = running.setdefault(node.id, [])
        start = ready
        if dur > 0 and (t.cores > 0 or t.memory > 0):
            for cand in sorted({ready} | {f for (_, f, _, _) in slots if f > ready}):
                probes = [cand] + [s for (s, _, _, _) in slots if cand < s < cand + dur]
                ok = True
                for p in probes:
                    c = sum(x[2] for x in slots if x[0] <= p < x[1])
                    m = sum(x[3] for x in slots if x[0] <= p < x[1])
                    if c + t.cores > node.cores or m + t.memory > node.memory:
                        ok = False
                        break
                if ok:
                    start = cand
                    break
            slots.append((start, start + dur, t.cores, t.memory))
        times[t.id] = (start, start + dur)
    return times


def brute_force_optimum(instance: Instance, workflow: Workflow) -> SolveResult:
    t0 = time.perf_counter()
    tasks = _topo(workflow)
    nodes = sorted(instance.nodes, key=lambda n: _natural(n.id))
    kpos = {n.id: i for i, n in enumerate(instance.nodes)}
    if len(nodes) ** len(tasks) > MAX_ASSIGNMENTS:
        raise TooLarge(f"{len(nodes)}^{len(tasks)} assignments exceed {MAX_ASSIGNMENTS}")
    for t in tasks:
        if not any(t.features <= n.features for n in nodes):
            raise Infeasible(t.id)
    concurrent = instance.capacity_mode.value == "concurrent"
    best = None
    count = 0
    for combo in itertools.product(nodes, repeat=len(tasks)):
        count += 1
        nodes_of = {t.id: n for t, n in zip(tasks, combo)}
        if not _feasible(instance, tasks, nodes_of):
            continue
        kidx = {t.id: kpos[n.id] for t, n in zip(tasks, combo)}
        timer = _time_sequential if concurrent else _time_recursive
        times = timer(instance, workflow, tasks, nodes_of, kidx)
        usage = 0.0
        for t in tasks:
            usage += _usage(instance, t, nodes_of[t.id])
        makespan = max((times[t.id][1] for t in tasks), default=0.0)
        obj = instance.alpha * usage + instance.beta * makespan
        if best is None or obj < best[0]:
            best = (obj, nodes_of, times, usage, makespan)
    wall = time.perf_counter() - t0
    if best is None:
        return SolveResult("brute", Status.INFEASIBLE, None, float("inf"), count, wall)
    obj, nodes_of, times, usage, makespan = best
    entries = tuple(
        ScheduleEntry(t.id, nodes_of[t.id].id, times[t.id][0], times[t.id][1], _usage(instance, t, nodes_of[t.id]))
        for t in tasks
    )
    return SolveResult("brute", Status.OPTIMAL, Schedule(workflow.id, entries, makespan, usage, obj), obj, count, wall)
