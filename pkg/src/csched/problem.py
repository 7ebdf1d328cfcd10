"""Flat array form of one (instance, workflow) pair, consumed by the kernels.

Tasks are indexed in topological order; nodes keep the instance order.
"""

from __future__ import annotations

import numpy as np

from .model import CapacityMode, Instance, UsageMode, Workflow, id_key, validate_workflow
from .errors import Infeasible, MissingDuration, ZeroTotalCapacity

MODE_CODES = {CapacityMode.OFF: 0, CapacityMode.AGGREGATE: 1, CapacityMode.CONCURRENT: 2}

_CHUNK = 512


class Problem:
    def __init__(self, instance: Instance, workflow: Workflow):
        self.instance = instance
        self.workflow = workflow
        self.order = validate_workflow(workflow)
        tmap = workflow.task_map
        tasks = [tmap[t] for t in self.order]
        nodes = list(instance.nodes)
        self.tasks = tasks
        self.nodes = nodes
        self.task_ids = list(self.order)
        self.node_ids = [nd.id for nd in nodes]
        self.task_pos = {t: i for i, t in enumerate(self.order)}
        n, m = len(tasks), len(nodes)
        self.n, self.m = n, m
        if n and not m:
            raise Infeasible(self.order[0], "the cluster has no nodes")

        self.mode = MODE_CODES[instance.capacity_mode]
        self.release = float(workflow.submission_time)
        self.alpha = float(instance.alpha)
        self.beta = float(instance.beta)

        # ascending node id; rank[k] = position of node k in that order
        self.node_order = np.array(sorted(range(m), key=lambda k: id_key(nodes[k].id)), dtype=np.int64)
        self.node_rank = np.empty(m, dtype=np.int64)
        self.node_rank[self.node_order] = np.arange(m, dtype=np.int64)

        self.speed = np.array([nd.processing_speed for nd in nodes], dtype=np.float64)
        self.dtr = np.array([nd.data_transfer_rate for nd in nodes], dtype=np.float64)
        self.cap_cores = np.array([nd.cores for nd in nodes], dtype=np.float64)
        self.cap_mem = np.array([nd.memory for nd in nodes], dtype=np.float64)
        cap_sto = np.array([nd.storage for nd in nodes], dtype=np.float64)

        self.req_cores = np.array([t.cores for t in tasks], dtype=np.float64)
        self.req_mem = np.array([t.memory for t in tasks], dtype=np.float64)
        req_sto = np.array([t.data_out for t in tasks], dtype=np.float64)

        # durations: explicit rows or work / speed computed on the fly
        self.work = np.zeros(n, dtype=np.float64)
        self.explicit_row = np.full(n, -1, dtype=np.int64)
        rows = []
        for j, t in enumerate(tasks):
            if t.durations is not None:
                if len(t.durations) == 1:
                    rows.append([t.durations[0]] * m)
                elif len(t.durations) == m:
                    rows.append(list(t.durations))
                else:
                    raise ValueError(
                        f"task {t.id}: {len(t.durations)} durations for {m} nodes"
                    )
                self.explicit_row[j] = len(rows) - 1
            elif t.work is not None:
                self.work[j] = t.work
            else:
                raise MissingDuration(f"task {t.id} has neither durations nor work")
        self.dur_explicit = np.array(rows, dtype=np.float64).reshape(len(rows), m)

        # usage = base[j] * factor[k]
        self.use_base = np.array([float(t.cores) for t in tasks], dtype=np.float64)
        if instance.usage_mode is UsageMode.SCALED:
            total = sum(nd.cores for nd in nodes)
            if total <= 0:
                raise ZeroTotalCapacity("total core capacity is zero")
            self.use_factor = np.array([nd.cores / total for nd in nodes], dtype=np.float64)
        else:
            self.use_factor = np.ones(m, dtype=np.float64)

        # predecessor lists (CSR)
        ptr = [0]
        idx, data, fixed = [], [], []
        for t in tasks:
            for d in t.dependencies:
                p = self.task_pos[d]
                idx.append(p)
                data.append(tasks[p].data_out)
                fixed.append(float(t.transfer_costs[d]) if d in t.transfer_costs else -1.0)
            ptr.append(len(idx))
        self.pred_ptr = np.array(ptr, dtype=np.int64)
        self.pred_idx = np.array(idx, dtype=np.int64)
        self.edge_data = np.array(data, dtype=np.float64)
        self.edge_fixed = np.array(fixed, dtype=np.float64)
        succ = [[] for _ in range(n)]
        for j in range(n):
            for e in range(ptr[j], ptr[j + 1]):
                succ[idx[e]].append(j)
        self.successors = succ

        # pairwise rates only materialized when overrides exist
        self.has_rates = 1 if instance.rates else 0
        if self.has_rates:
            rm = np.minimum(self.dtr[:, None], self.dtr[None, :])
            pos = {nid: k for k, nid in enumerate(self.node_ids)}
            for (a, b), r in instance.rates.items():
                if a in pos and b in pos:
                    rm[pos[a], pos[b]] = r
                    rm[pos[b], pos[a]] = r
            self.rate_matrix = np.ascontiguousarray(rm)
        else:
            self.rate_matrix = np.zeros((0, 0), dtype=np.float64)

        self.featok, self.fit, self.allowed = self._static_feasibility(tasks, nodes, req_sto, cap_sto)

    def _static_feasibility(self, tasks, nodes, req_sto, cap_sto):
        n, m = self.n, self.m
        vocab = sorted({f for t in tasks for f in t.features} | {f for nd in nodes for f in nd.features})
        fpos = {f: i for i, f in enumerate(vocab)}
        nf = max(len(vocab), 1)
        tf = np.zeros((n, nf), dtype=bool)
        nfm = np.zeros((m, nf), dtype=bool)
        for j, t in enumerate(tasks):
            for f in t.features:
                tf[j, fpos[f]] = True
        for k, nd in enumerate(nodes):
            for f in nd.features:
                nfm[k, fpos[f]] = True
        featok = np.zeros((n, m), dtype=np.uint8)
        fit = np.ones((n, m), dtype=bool)
        missing = ~nfm
        check_fit = self.mode != 0
        with np.errstate(divide="ignore", invalid="ignore"):
            for lo in range(0, n, _CHUNK):
                hi = min(lo + _CHUNK, n)
                bad = (tf[lo:hi, None, :] & missing[None, :, :]).any(axis=2) if len(vocab) else np.zeros((hi - lo, m), bool)
                featok[lo:hi] = ~bad
                if check_fit:
                    blk = np.ones((hi - lo, m), dtype=bool)
                    for req, cap in ((self.req_cores, self.cap_cores), (self.req_mem, self.cap_mem), (req_sto, cap_sto)):
                        r = req[lo:hi, None]
                        ratio = r / cap[None, :]
                        ok = (r == 0) | ((cap[None, :] > 0) & (ratio <= 1))
                        blk &= ok
                    fit[lo:hi] = blk
        allowed = (featok.astype(bool) & fit).astype(np.uint8)
        return featok, fit.astype(np.uint8), allowed

    def duration(self, j: int, k: int) -> float:
        row = self.explicit_row[j]
        if row >= 0:
            return float(self.dur_explicit[row, k])
        return float(self.work[j] / self.speed[k])

    def duration_matrix(self) -> np.ndarray:
        d = self.work[:, None] / self.speed[None, :]
        rows = self.explicit_row >= 0
        if rows.any():
            d[rows] = self.dur_explicit[self.explicit_row[rows]]
        return d

    def candidates(self, j: int) -> np.ndarray:
        """Allowed node indices for task j, ascending node id."""
        mask = self.allowed[j, self.node_order].astype(bool)
        return self.node_order[mask]

    def max_transfer(self, e: int) -> float:
        if self.edge_fixed[e] >= 0:
            return float(self.edge_fixed[e])
        if self.m < 2:
            return 0.0
        if self.has_rates:
            off = self.rate_matrix[~np.eye(self.m, dtype=bool)]
            return float(self.edge_data[e] / off.min())
        return float(self.edge_data[e] / self.dtr.min())

    def assignment_vector(self, assignment: dict) -> np.ndarray:
        pos = {nid: k for k, nid in enumerate(self.node_ids)}
        return np.array([pos[assignment[t]] for t in self.task_ids], dtype=np.int64)

    def assignment_dict(self, vec) -> dict:
        return {t: self.node_ids[int(k)] for t, k in zip(self.task_ids, vec)}
