"""Pure-Python kernels. Same contract and bit-identical results as the
compiled ``_kernels`` module; used when the extension is unavailable or
``CSCHED_PURE=1`` is set.
"""

import math
import time

import numpy as np

INF = math.inf
# the bound is exact in real arithmetic but its float sum can overshoot by
# a few ulps, so pruning keeps branches that tie the incumbent this closely
PRUNE_RTOL = 1e-9
BACKEND = "python"


class _Abort(Exception):
    pass


class Timeline:
    """Incremental placement of tasks onto nodes.

    Placing a task fixes its start at the earliest time permitted by its
    placed predecessors (plus cross-node transfers) and, in concurrent
    capacity mode, by the free cores/memory of the node. Placements are
    undone in LIFO order with :meth:`pop`.
    """

    _FIELDS = ("explicit_row", "dur_explicit", "work", "speed", "dtr", "rate_matrix",
               "pred_ptr", "pred_idx", "edge_data", "edge_fixed", "req_cores", "req_mem",
               "cap_cores", "cap_mem", "use_base", "use_factor", "allowed", "featok", "fit")

    def __init__(self, p):
        self.n, self.m = p.n, p.m
        self.mode = p.mode
        self.release = p.release
        self.has_rates = p.has_rates
        cache = p.__dict__.get("_py_lists")
        if cache is None:
            cache = {name: getattr(p, name).tolist() for name in self._FIELDS}
            p._py_lists = cache
        self.__dict__.update(cache)
        self.reset()

    def reset(self):
        n, m = self.n, self.m
        self.start = [0.0] * n
        self.finish = [0.0] * n
        self.node = [-1] * n
        self.registered = [False] * n
        self.ivs = [[] for _ in range(m)]
        self.agg = [0.0] * m
        self.stack = []

    def duration(self, j, k):
        row = self.explicit_row[j]
        if row >= 0:
            return self.dur_explicit[row][k]
        return self.work[j] / self.speed[k]

    def usage(self, j, k):
        return self.use_base[j] * self.use_factor[k]

    def transfer(self, e, a, b):
        if a == b:
            return 0.0
        fixed = self.edge_fixed[e]
        if fixed >= 0.0:
            return fixed
        if self.has_rates:
            rate = self.rate_matrix[a][b]
        else:
            rate = min(self.dtr[a], self.dtr[b])
        return self.edge_data[e] / rate

    def ready_time(self, j, k):
        t = self.release
        finish, node = self.finish, self.node
        for e in range(self.pred_ptr[j], self.pred_ptr[j + 1]):
            q = self.pred_idx[e]
            a = finish[q] + self.transfer(e, node[q], k)
            if a > t:
                t = a
        return t

    def _needs_slot(self, j, k, d):
        return (self.mode == 2 and d > 0.0
                and (self.req_cores[j] > 0.0 or self.req_mem[j] > 0.0))

    def earliest_start(self, j, k, ready):
        d = self.duration(j, k)
        if not self._needs_slot(j, k, d) or not self.fit[j][k]:
            return ready
        c, mm = self.req_cores[j], self.req_mem[j]
        cap_c, cap_m = self.cap_cores[k], self.cap_mem[k]
        ivs = self.ivs[k][::-1]
        start, finish = self.start, self.finish
        t = ready
        while True:
            end = t + d
            ok = True
            p = t
            idx = -1
            while True:
                lc = 0.0
                lm = 0.0
                for q in ivs:
                    if start[q] <= p < finish[q]:
                        lc += self.req_cores[q]
                        lm += self.req_mem[q]
                if lc + c > cap_c or lm + mm > cap_m:
                    ok = False
                    break
                # next probe point: an interval start strictly inside (t, end)
                idx += 1
                while idx < len(ivs):
                    s = start[ivs[idx]]
                    if t < s < end:
                        break
                    idx += 1
                if idx >= len(ivs):
                    break
                p = start[ivs[idx]]
            if ok:
                return t
            nt = INF
            for q in ivs:
                f = finish[q]
                if t < f < nt:
                    nt = f
            t = nt

    def start_time(self, j, k):
        return self.earliest_start(j, k, self.ready_time(j, k))

    def place(self, j, k):
        s = self.start_time(j, k)
        d = self.duration(j, k)
        f = s + d
        self.start[j] = s
        self.finish[j] = f
        self.node[j] = k
        self.agg[k] += self.usage(j, k)
        reg = self._needs_slot(j, k, d)
        self.registered[j] = reg
        if reg:
            self.ivs[k].append(j)
        self.stack.append(j)
        return f

    def pop(self):
        j = self.stack.pop()
        k = self.node[j]
        if self.registered[j]:
            self.ivs[k].pop()
            self.registered[j] = False
        self.agg[k] -= self.usage(j, k)
        self.node[j] = -1
        return j

    def eft_row(self, j):
        out = np.full(self.m, INF)
        row = self.allowed[j]
        for k in range(self.m):
            if row[k]:
                s = self.start_time(j, k)
                out[k] = s + self.duration(j, k)
        return out

    def start_row(self, j):
        out = np.full(self.m, INF)
        row = self.allowed[j]
        for k in range(self.m):
            if row[k]:
                out[k] = self.start_time(j, k)
        return out

    def starts(self):
        return np.array(self.start, dtype=np.float64)

    def finishes(self):
        return np.array(self.finish, dtype=np.float64)


def evaluate(p, assign):
    """Schedule a full assignment vector in topological order.

    Returns ``(start, finish, violations, total_usage)``. Violations count
    missing features, per-task capacity misfits and aggregate overflows.
    """
    tl = Timeline(p)
    usage = 0.0
    viol = 0
    for j in range(tl.n):
        k = int(assign[j])
        if not tl.featok[j][k]:
            viol += 1
        if tl.mode != 0 and not tl.fit[j][k]:
            viol += 1
        tl.place(j, k)
        u = tl.usage(j, k)
        usage += u
        if tl.mode == 1 and tl.agg[k] > tl.cap_cores[k]:
            viol += 1
    return tl.starts(), tl.finishes(), viol, usage


def fitness_many(p, assigns, penalty):
    """Penalized objective for each row of ``assigns``."""
    assigns = np.asarray(assigns)
    out = np.empty(assigns.shape[0])
    alpha, beta = p.alpha, p.beta
    for r in range(assigns.shape[0]):
        _, finish, viol, usage = evaluate(p, assigns[r])
        mk = float(finish.max()) if p.n else 0.0
        out[r] = alpha * usage + beta * mk + penalty * viol
    return out


def branch_and_bound(p, deadline=None, check_every=256):
    """Depth-first branch-and-bound over task -> node choices.

    Tasks are branched in topological order and nodes in ascending id, so
    the first optimum found is the lexicographically smallest one.
    Returns ``(best_vec or None, best_obj, explored, timed_out)``.
    """
    n, m = p.n, p.m
    tl = Timeline(p)
    alpha, beta = p.alpha, p.beta
    order = p.node_order.tolist()
    allowed = tl.allowed
    mindur = [INF] * n
    minuse = [INF] * n
    for j in range(n):
        for k in range(m):
            if allowed[j][k]:
                mindur[j] = min(mindur[j], tl.duration(j, k))
                minuse[j] = min(minuse[j], tl.usage(j, k))
    if any(d == INF for d in mindur):
        return None, INF, 0, False
    suffix = [0.0] * (n + 1)
    for j in range(n - 1, -1, -1):
        suffix[j] = suffix[j + 1] + minuse[j]
    lbf = [0.0] * n
    pred_ptr, pred_idx = tl.pred_ptr, tl.pred_idx
    finish = tl.finish
    release = tl.release
    mode = tl.mode
    cap = tl.cap_cores

    state = {"best": INF, "vec": None, "explored": 0, "timed_out": False}
    cur = [0] * n

    def makespan_bound(depth, cur_max):
        mx = cur_max
        for j in range(depth, n):
            s = release
            for e in range(pred_ptr[j], pred_ptr[j + 1]):
                q = pred_idx[e]
                fq = finish[q] if q < depth else lbf[q]
                if fq > s:
                    s = fq
            lbf[j] = s + mindur[j]
            if lbf[j] > mx:
                mx = lbf[j]
        return mx

    def dfs(depth, usage, cur_max):
        state["explored"] += 1
        if deadline is not None and state["explored"] % check_every == 0:
            if time.perf_counter() > deadline:
                state["timed_out"] = True
                raise _Abort
        if depth == n:
            obj = alpha * usage + beta * cur_max
            if obj < state["best"]:
                state["best"] = obj
                state["vec"] = list(cur)
            return
        row = allowed[depth]
        for k in order:
            if not row[k]:
                continue
            u = tl.usage(depth, k)
            if mode == 1 and tl.agg[k] + u > cap[k]:
                continue
            f = tl.place(depth, k)
            cur[depth] = k
            u2 = usage + u
            cm = f if f > cur_max else cur_max
            lb = alpha * (u2 + suffix[depth + 1]) + beta * makespan_bound(depth + 1, cm)
            if lb < state["best"] + PRUNE_RTOL * abs(state["best"]):
                dfs(depth + 1, u2, cm)
            tl.pop()

    try:
        dfs(0, 0.0, 0.0)
    except _Abort:
        pass
    vec = None if state["vec"] is None else np.array(state["vec"], dtype=np.int64)
    return vec, state["best"], state["explored"], state["timed_out"]
