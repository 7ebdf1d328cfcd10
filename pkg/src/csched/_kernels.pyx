# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: timeline placement, batch fitness and branch-and-bound.

Mirrors ``_pykernels`` operation for operation so both backends return
bit-identical floats.
"""

import time

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY, fabs

cdef double PRUNE_RTOL = 1e-9  # see _pykernels

cnp.import_array()

BACKEND = "cython"


cdef class Timeline:
    cdef public int n, m, mode, has_rates
    cdef public double release
    cdef object _p
    cdef long long[:] explicit_row
    cdef double[:, :] dur_explicit
    cdef double[:] work, speed, dtr
    cdef double[:, :] rate_matrix
    cdef long long[:] pred_ptr, pred_idx
    cdef double[:] edge_data, edge_fixed
    cdef double[:] req_cores, req_mem, cap_cores, cap_mem, use_base, use_factor
    cdef unsigned char[:, :] allowed, featok, fit
    # state
    cdef double[:] start, finish, agg
    cdef long long[:] node, nxt, head, stack
    cdef unsigned char[:] registered
    cdef int top
    cdef object _start_arr, _finish_arr

    def __init__(self, p):
        self._p = p
        self.n = p.n
        self.m = p.m
        self.mode = p.mode
        self.has_rates = p.has_rates
        self.release = p.release
        self.explicit_row = p.explicit_row
        self.dur_explicit = p.dur_explicit
        self.work = p.work
        self.speed = p.speed
        self.dtr = p.dtr
        self.rate_matrix = p.rate_matrix
        self.pred_ptr = p.pred_ptr
        self.pred_idx = p.pred_idx
        self.edge_data = p.edge_data
        self.edge_fixed = p.edge_fixed
        self.req_cores = p.req_cores
        self.req_mem = p.req_mem
        self.cap_cores = p.cap_cores
        self.cap_mem = p.cap_mem
        self.use_base = p.use_base
        self.use_factor = p.use_factor
        self.allowed = p.allowed
        self.featok = p.featok
        self.fit = p.fit
        self._start_arr = np.zeros(self.n, dtype=np.float64)
        self._finish_arr = np.zeros(self.n, dtype=np.float64)
        self.start = self._start_arr
        self.finish = self._finish_arr
        self.agg = np.zeros(self.m, dtype=np.float64)
        self.node = np.full(self.n, -1, dtype=np.int64)
        self.nxt = np.full(self.n, -1, dtype=np.int64)
        self.head = np.full(self.m, -1, dtype=np.int64)
        self.stack = np.zeros(max(self.n, 1), dtype=np.int64)
        self.registered = np.zeros(self.n, dtype=np.uint8)
        self.top = 0

    def reset(self):
        cdef int j, k
        for j in range(self.n):
            self.start[j] = 0.0
            self.finish[j] = 0.0
            self.node[j] = -1
            self.nxt[j] = -1
            self.registered[j] = 0
        for k in range(self.m):
            self.agg[k] = 0.0
            self.head[k] = -1
        self.top = 0

    cdef inline double c_duration(self, int j, int k):
        cdef long long row = self.explicit_row[j]
        if row >= 0:
            return self.dur_explicit[row, k]
        return self.work[j] / self.speed[k]

    cdef inline double c_usage(self, int j, int k):
        return self.use_base[j] * self.use_factor[k]

    cdef inline double c_transfer(self, long long e, long long a, long long b):
        cdef double fixed, rate, ra, rb
        if a == b:
            return 0.0
        fixed = self.edge_fixed[e]
        if fixed >= 0.0:
            return fixed
        if self.has_rates:
            rate = self.rate_matrix[a, b]
        else:
            ra = self.dtr[a]
            rb = self.dtr[b]
            rate = rb if rb < ra else ra
        return self.edge_data[e] / rate

    cdef double c_ready(self, int j, int k):
        cdef double t = self.release, a
        cdef long long e, q
        for e in range(self.pred_ptr[j], self.pred_ptr[j + 1]):
            q = self.pred_idx[e]
            a = self.finish[q] + self.c_transfer(e, self.node[q], k)
            if a > t:
                t = a
        return t

    cdef inline bint c_needs_slot(self, int j, int k, double d):
        return (self.mode == 2 and d > 0.0
                and (self.req_cores[j] > 0.0 or self.req_mem[j] > 0.0))

    cdef double c_earliest(self, int j, int k, double ready):
        cdef double d = self.c_duration(j, k)
        cdef double c, mm, cap_c, cap_m, t, end, p, lc, lm, nt, f, s
        cdef long long q, it
        cdef bint ok
        if not self.c_needs_slot(j, k, d) or not self.fit[j, k]:
            return ready
        c = self.req_cores[j]
        mm = self.req_mem[j]
        cap_c = self.cap_cores[k]
        cap_m = self.cap_mem[k]
        t = ready
        while True:
            end = t + d
            ok = True
            p = t
            it = -2
            while True:
                lc = 0.0
                lm = 0.0
                q = self.head[k]
                while q >= 0:
                    if self.start[q] <= p and p < self.finish[q]:
                        lc += self.req_cores[q]
                        lm += self.req_mem[q]
                    q = self.nxt[q]
                if lc + c > cap_c or lm + mm > cap_m:
                    ok = False
                    break
                # next probe point: an interval start strictly inside (t, end)
                if it == -2:
                    it = self.head[k]
                else:
                    it = self.nxt[it]
                while it >= 0:
                    s = self.start[it]
                    if t < s and s < end:
                        break
                    it = self.nxt[it]
                if it < 0:
                    break
                p = self.start[it]
            if ok:
                return t
            nt = INFINITY
            q = self.head[k]
            while q >= 0:
                f = self.finish[q]
                if t < f and f < nt:
                    nt = f
                q = self.nxt[q]
            t = nt

    cdef inline double c_start(self, int j, int k):
        return self.c_earliest(j, k, self.c_ready(j, k))

    cdef double c_place(self, int j, int k):
        cdef double s = self.c_start(j, k)
        cdef double d = self.c_duration(j, k)
        cdef double f = s + d
        self.start[j] = s
        self.finish[j] = f
        self.node[j] = k
        self.agg[k] += self.c_usage(j, k)
        if self.c_needs_slot(j, k, d):
            self.registered[j] = 1
            self.nxt[j] = self.head[k]
            self.head[k] = j
        else:
            self.registered[j] = 0
        self.stack[self.top] = j
        self.top += 1
        return f

    cdef int c_pop(self):
        self.top -= 1
        cdef int j = <int>self.stack[self.top]
        cdef int k = <int>self.node[j]
        if self.registered[j]:
            self.head[k] = self.nxt[j]
            self.nxt[j] = -1
            self.registered[j] = 0
        self.agg[k] -= self.c_usage(j, k)
        self.node[j] = -1
        return j

    # python surface -------------------------------------------------------

    def duration(self, int j, int k):
        return self.c_duration(j, k)

    def usage(self, int j, int k):
        return self.c_usage(j, k)

    def ready_time(self, int j, int k):
        return self.c_ready(j, k)

    def earliest_start(self, int j, int k, double ready):
        return self.c_earliest(j, k, ready)

    def start_time(self, int j, int k):
        return self.c_start(j, k)

    def place(self, int j, int k):
        return self.c_place(j, k)

    def pop(self):
        return self.c_pop()

    def eft_row(self, int j):
        out = np.full(self.m, np.inf)
        cdef double[:] o = out
        cdef int k
        for k in range(self.m):
            if self.allowed[j, k]:
                o[k] = self.c_start(j, k) + self.c_duration(j, k)
        return out

    def start_row(self, int j):
        out = np.full(self.m, np.inf)
        cdef double[:] o = out
        cdef int k
        for k in range(self.m):
            if self.allowed[j, k]:
                o[k] = self.c_start(j, k)
        return out

    def starts(self):
        return np.array(self._start_arr, copy=True)

    def finishes(self):
        return np.array(self._finish_arr, copy=True)

    @property
    def agg_usage(self):
        return np.asarray(self.agg).copy()


cdef int _eval_into(Timeline tl, long long[:] assign, double* usage_out) except -1:
    cdef int j, k, viol = 0
    cdef double usage = 0.0
    tl.reset()
    for j in range(tl.n):
        k = <int>assign[j]
        if not tl.featok[j, k]:
            viol += 1
        if tl.mode != 0 and not tl.fit[j, k]:
            viol += 1
        tl.c_place(j, k)
        usage += tl.c_usage(j, k)
        if tl.mode == 1 and tl.agg[k] > tl.cap_cores[k]:
            viol += 1
    usage_out[0] = usage
    return viol


def evaluate(p, assign):
    cdef Timeline tl = Timeline(p)
    cdef double usage = 0.0
    cdef long long[:] a = np.ascontiguousarray(assign, dtype=np.int64)
    viol = _eval_into(tl, a, &usage)
    return tl.starts(), tl.finishes(), viol, usage


def fitness_many(p, assigns, double penalty):
    cdef long long[:, :] A = np.ascontiguousarray(assigns, dtype=np.int64)
    cdef Timeline tl = Timeline(p)
    cdef int r, j, viol
    cdef double usage, mk
    cdef double alpha = p.alpha, beta = p.beta
    out = np.empty(A.shape[0])
    cdef double[:] o = out
    for r in range(A.shape[0]):
        viol = _eval_into(tl, A[r], &usage)
        mk = 0.0
        if tl.n > 0:
            mk = tl.finish[0]
            for j in range(1, tl.n):
                if tl.finish[j] > mk:
                    mk = tl.finish[j]
        o[r] = alpha * usage + beta * mk + penalty * viol
    return out


cdef class _BnB:
    cdef Timeline tl
    cdef int n, m, mode, check_every
    cdef double alpha, beta, best
    cdef object deadline
    cdef long long explored
    cdef bint timed_out, found
    cdef long long[:] order, cur, best_vec
    cdef double[:] mindur, suffix, lbf

    cdef double makespan_bound(self, int depth, double cur_max):
        cdef double mx = cur_max, s, fq
        cdef int j
        cdef long long e, q
        cdef Timeline tl = self.tl
        for j in range(depth, self.n):
            s = tl.release
            for e in range(tl.pred_ptr[j], tl.pred_ptr[j + 1]):
                q = tl.pred_idx[e]
                if q < depth:
                    fq = tl.finish[q]
                else:
                    fq = self.lbf[q]
                if fq > s:
                    s = fq
            self.lbf[j] = s + self.mindur[j]
            if self.lbf[j] > mx:
                mx = self.lbf[j]
        return mx

    cdef int dfs(self, int depth, double usage, double cur_max) except -1:
        cdef int i, k
        cdef double u, f, u2, cm, lb, obj
        cdef Timeline tl = self.tl
        self.explored += 1
        if self.deadline is not None and self.explored % self.check_every == 0:
            if time.perf_counter() > self.deadline:
                self.timed_out = True
                return 1
        if depth == self.n:
            obj = self.alpha * usage + self.beta * cur_max
            if obj < self.best:
                self.best = obj
                self.found = True
                for i in range(self.n):
                    self.best_vec[i] = self.cur[i]
            return 0
        for i in range(self.m):
            k = <int>self.order[i]
            if not tl.allowed[depth, k]:
                continue
            u = tl.c_usage(depth, k)
            if self.mode == 1 and tl.agg[k] + u > tl.cap_cores[k]:
                continue
            f = tl.c_place(depth, k)
            self.cur[depth] = k
            u2 = usage + u
            cm = f if f > cur_max else cur_max
            lb = self.alpha * (u2 + self.suffix[depth + 1]) + self.beta * self.makespan_bound(depth + 1, cm)
            if lb < self.best + PRUNE_RTOL * fabs(self.best):
                if self.dfs(depth + 1, u2, cm):
                    return 1
            tl.c_pop()
        return 0


def branch_and_bound(p, deadline=None, check_every=256):
    cdef _BnB b = _BnB()
    cdef int n = p.n, m = p.m, j, k
    cdef Timeline tl = Timeline(p)
    b.tl = tl
    b.n = n
    b.m = m
    b.mode = p.mode
    b.alpha = p.alpha
    b.beta = p.beta
    b.best = INFINITY
    b.deadline = deadline
    b.check_every = check_every
    b.explored = 0
    b.timed_out = False
    b.found = False
    b.order = np.ascontiguousarray(p.node_order, dtype=np.int64)
    b.cur = np.zeros(max(n, 1), dtype=np.int64)
    b.best_vec = np.zeros(max(n, 1), dtype=np.int64)
    mindur = np.full(n, np.inf)
    minuse = np.full(n, np.inf)
    cdef double[:] md = mindur, mu = minuse
    cdef double d, u
    for j in range(n):
        for k in range(m):
            if tl.allowed[j, k]:
                d = tl.c_duration(j, k)
                u = tl.c_usage(j, k)
                if d < md[j]:
                    md[j] = d
                if u < mu[j]:
                    mu[j] = u
    for j in range(n):
        if md[j] == INFINITY:
            return None, float("inf"), 0, False
    suffix = np.zeros(n + 1)
    cdef double[:] sf = suffix
    for j in range(n - 1, -1, -1):
        sf[j] = sf[j + 1] + mu[j]
    b.mindur = mindur
    b.suffix = suffix
    b.lbf = np.zeros(max(n, 1))
    b.dfs(0, 0.0, 0.0)
    vec = np.asarray(b.best_vec)[:n].copy() if b.found else None
    return vec, b.best, b.explored, bool(b.timed_out)
