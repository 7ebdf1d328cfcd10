"""Compare the compiled kernels with the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Times schedule evaluation, batch fitness, branch-and-bound and a HEFT-style
EFT sweep on both backends, checks that they return identical numbers,
and prints the speedup per kernel.
"""

import argparse
import time

import numpy as np

from csched import _pykernels
from csched.catalog import quality_cases
from csched.ingest import SyntheticSpec, generate_synthetic
from csched.kernels import backends
from csched.model import Instance
from csched.problem import Problem


def best_of(fn, repeat):
    out, best = None, float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def eft_sweep(mod, p):
    tl = mod.Timeline(p)
    acc = 0.0
    for j in range(p.n):
        row = np.asarray(tl.eft_row(j))
        cands = np.flatnonzero(p.allowed[j])
        k = int(cands[np.argmin(row[cands])])
        acc += tl.place(j, k)
    return acc


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    mods = backends()
    if "cython" not in mods:
        print("compiled kernels not built; only the Python backend is available")
        return
    py, cy = mods["python"], mods["cython"]

    nodes, wf = generate_synthetic(SyntheticSpec(50, 500, seed=7))
    big = Problem(Instance(nodes, (wf,)), wf)
    rng = np.random.default_rng(0)
    pop = np.stack([[rng.choice(big.candidates(j)) for j in range(big.n)] for _ in range(30)])
    w6 = next(c for c in quality_cases() if c.label == "W6")
    small = Problem(w6.instance(), w6.workflow)

    jobs = [
        ("evaluate 500 tasks", lambda m: m.evaluate(big, pop[0])[1].tolist()),
        ("fitness x30 500 tasks", lambda m: m.fitness_many(big, pop, 1e6).tolist()),
        ("eft sweep 50x500", lambda m: eft_sweep(m, big)),
        ("branch&bound STGS2", lambda m: m.branch_and_bound(small)[:3]),
    ]
    print(f"{'kernel':24s} {'python s':>10s} {'cython s':>10s} {'speedup':>8s}  same")
    for name, fn in jobs:
        tp, rp = best_of(lambda: fn(py), args.repeat)
        tc, rc = best_of(lambda: fn(cy), args.repeat)
        same = repr(rp) == repr(rc)
        print(f"{name:24s} {tp:10.4f} {tc:10.4f} {tp / tc:8.1f}  {same}")
    assert py is _pykernels


if __name__ == "__main__":
    main()
