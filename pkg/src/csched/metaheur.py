"""GA, SA, PSO and ACO over the task -> node assignment space.

All four share one fitness: the weighted objective of the built schedule
plus a linear penalty per constraint violation, with a penalty large
enough that any feasible candidate beats any infeasible one.

Randomness comes from numpy's PCG64 seeded with ``MhParams.seed``.
Population members draw their initial state from child streams spawned
off ``SeedSequence(seed)`` (member ``i`` uses child ``i``); everything
else uses the root stream, so a seed fixes the whole run.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .engine import schedule_from_vector
from .exact import require_feature_nodes
from .heuristics import olb_vector
from .model import INF, Instance, SolveResult, Status, Workflow
from .problem import Problem

DEFAULT_ITERATIONS = {"ga": 400, "sa": 3000, "pso": 100, "aco": 40}


@dataclass(frozen=True)
class MhParams:
    seed: int = 42
    iterations: Optional[int] = None
    population_size: int = 30
    mutation_rate: float = 0.1
    crossover_rate: float = 0.9
    initial_temperature: float = 0.1  # relative to the starting fitness
    cooling_rate: float = 0.995
    inertia: float = 0.7
    cognitive: float = 1.5
    social: float = 1.5
    evaporation_rate: float = 0.1
    pheromone_exponent: float = 1.0
    heuristic_exponent: float = 2.0
    infeasibility_penalty: Optional[float] = None
    time_budget: Optional[float] = None

    def __post_init__(self):
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        for name in ("mutation_rate", "crossover_rate", "cooling_rate", "evaporation_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if not self.initial_temperature > 0:
            raise ValueError("initial_temperature must be positive")
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if self.iterations is not None and self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if self.time_budget is not None and not self.time_budget > 0:
            raise ValueError("time_budget must be positive")


@dataclass
class Candidate:
    assignment: np.ndarray
    fitness: float

    def key(self):
        return (self.fitness, self.assignment.tobytes())


class _Context:
    def __init__(self, technique, instance, workflow, params, problem):
        self.t0 = time.perf_counter()
        self.technique = technique
        self.params = params
        self.problem = problem or Problem(instance, workflow)
        require_feature_nodes(self.problem)
        p = self.problem
        self.iterations = params.iterations if params.iterations is not None else DEFAULT_ITERATIONS[technique]
        # move targets: capacity-fitting feature nodes, falling back to feature nodes
        self.cands = []
        for j in range(p.n):
            c = p.candidates(j)
            if len(c) == 0:
                mask = p.featok[j, p.node_order].astype(bool)
                c = p.node_order[mask]
            self.cands.append(c)
        self.ncand = np.array([len(c) for c in self.cands], dtype=np.int64)
        width = int(self.ncand.max()) if p.n else 1
        self.cand_matrix = np.zeros((p.n, max(width, 1)), dtype=np.int64)
        for j, c in enumerate(self.cands):
            self.cand_matrix[j, :len(c)] = c
        self.penalty = params.infeasibility_penalty if params.infeasibility_penalty is not None \
            else default_penalty(p)
        self.root = np.random.SeedSequence(params.seed)
        self.rng = np.random.Generator(np.random.PCG64(self.root))
        self.best: Optional[Candidate] = None
        self.trace = []
        self.timed_out = False
        self.deadline = None if params.time_budget is None else self.t0 + params.time_budget

    def member_rngs(self, count):
        return [np.random.Generator(np.random.PCG64(s)) for s in self.root.spawn(count)]

    def random_vector(self, rng):
        idx = (rng.random(self.problem.n) * self.ncand).astype(np.int64)
        return self.cand_matrix[np.arange(self.problem.n), idx]

    def fitness(self, pop):
        pop = np.atleast_2d(pop)
        if self.problem.n == 0:
            return np.zeros(pop.shape[0])
        return kernels.fitness_many(self.problem, pop, self.penalty)

    def offer(self, vecs, fits):
        """Update the incumbent with the best of a batch (ties by bytes)."""
        best_i = min(range(len(fits)), key=lambda i: (fits[i], vecs[i].tobytes()))
        cand = Candidate(np.array(vecs[best_i], dtype=np.int64), float(fits[best_i]))
        if self.best is None or cand.key() < self.best.key():
            self.best = cand
        return best_i

    def out_of_time(self):
        if self.deadline is not None and time.perf_counter() > self.deadline:
            self.timed_out = True
        return self.timed_out

    def result(self) -> SolveResult:
        p = self.problem
        wall = time.perf_counter() - self.t0
        if self.best is None:
            vec = np.zeros(0, dtype=np.int64)
        else:
            vec = self.best.assignment
        _, _, viol, _ = kernels.evaluate(p, vec)
        if viol:
            return SolveResult(self.technique, Status.INFEASIBLE, None, INF, 0, wall, trace=self.trace)
        schedule = schedule_from_vector(p, vec)
        status = Status.TIMEOUT if self.timed_out else Status.FEASIBLE
        return SolveResult(self.technique, status, schedule, schedule.objective, 0, wall, trace=self.trace)


def default_penalty(problem: Problem) -> float:
    """Ten times an upper bound on any feasible objective."""
    if problem.n == 0:
        return 1.0
    d = problem.duration_matrix()
    usage = np.outer(problem.use_base, problem.use_factor)
    serial = problem.release + float(d.max(axis=1).sum())
    serial += sum(problem.max_transfer(e) for e in range(len(problem.pred_idx)))
    bound = problem.alpha * float(usage.max(axis=1).sum()) + problem.beta * serial
    return max(10.0 * bound, 1.0)


def solve_ga(instance: Instance, workflow: Workflow, params: MhParams = MhParams(),
             problem: Problem = None) -> SolveResult:
    """Genetic algorithm: binary tournaments, uniform crossover, per-gene
    mutation to a random allowed node, one elite carried over."""
    ctx = _Context("ga", instance, workflow, params, problem)
    n, P = ctx.problem.n, params.population_size
    rng = ctx.rng
    pop = np.array([ctx.random_vector(r) for r in ctx.member_rngs(P)], dtype=np.int64).reshape(P, n)
    fits = ctx.fitness(pop)
    ctx.offer(pop, fits)
    ctx.trace.append(ctx.best.fitness)
    rows = np.arange(n)

    def tournament():
        a, b = rng.integers(P, size=2)
        return pop[a] if (fits[a], a) <= (fits[b], b) else pop[b]

    for _ in range(ctx.iterations):
        if ctx.out_of_time():
            break
        children = [ctx.best.assignment.copy()]
        while len(children) < P:
            p1, p2 = tournament(), tournament()
            if rng.random() < params.crossover_rate:
                child = np.where(rng.random(n) < 0.5, p1, p2)
            else:
                child = p1.copy()
            genes = rng.random(n) < params.mutation_rate
            if genes.any():
                idx = (rng.random(n) * ctx.ncand).astype(np.int64)
                child = np.where(genes, ctx.cand_matrix[rows, idx], child)
            children.append(child)
        pop = np.array(children, dtype=np.int64).reshape(P, n)
        fits = ctx.fitness(pop)
        ctx.offer(pop, fits)
        ctx.trace.append(ctx.best.fitness)
    return ctx.result()


def solve_sa(instance: Instance, workflow: Workflow, params: MhParams = MhParams(),
             problem: Problem = None) -> SolveResult:
    """Simulated annealing from the OLB assignment with single-task moves,
    Metropolis acceptance and geometric cooling.

    The starting temperature is ``initial_temperature`` times the weighted
    makespan of the start point, and the acceptance test works on the
    difference of each objective term separately. A uniform change of node
    speeds then rescales deltas and temperature alike.
    """
    ctx = _Context("sa", instance, workflow, params, problem)
    p = ctx.problem
    n = p.n
    rng = ctx.rng

    def parts(vec):
        _, finish, viol, usage = kernels.evaluate(p, vec)
        mk = float(finish.max()) if n else 0.0
        return usage, mk, viol, p.alpha * usage + p.beta * mk + ctx.penalty * viol

    cur = olb_vector(p)
    if cur is None:
        cur = ctx.random_vector(ctx.member_rngs(1)[0])
    cu, cm, cv, cur_fit = parts(cur)
    ctx.offer(cur[None, :], [cur_fit])
    ctx.trace.append(ctx.best.fitness)
    scale = p.beta * cm if p.beta * cm > 0 else abs(cur_fit)
    temp = params.initial_temperature * (scale if scale > 0 else 1.0)
    for _ in range(ctx.iterations if n else 0):
        if ctx.out_of_time():
            break
        j = int(rng.integers(n))
        k = int(ctx.cands[j][int(rng.integers(ctx.ncand[j]))])
        if k != cur[j]:
            nxt = cur.copy()
            nxt[j] = k
            u, mk, v, f = parts(nxt)
            delta = p.alpha * (u - cu) + p.beta * (mk - cm) + ctx.penalty * (v - cv)
            if delta <= 0 or (temp > 0 and rng.random() < math.exp(-delta / temp)):
                cur, cu, cm, cv, cur_fit = nxt, u, mk, v, f
                ctx.offer(cur[None, :], [cur_fit])
        temp *= params.cooling_rate
        ctx.trace.append(ctx.best.fitness)
    return ctx.result()


def solve_pso(instance: Instance, workflow: Workflow, params: MhParams = MhParams(),
              problem: Problem = None) -> SolveResult:
    """Particle swarm over random keys: every task holds one key per node
    and decodes to the allowed node with the largest key."""
    ctx = _Context("pso", instance, workflow, params, problem)
    p = ctx.problem
    n, m, P = p.n, p.m, params.population_size
    # columns follow ascending node id so argmax ties land on the lowest id
    allowed = np.zeros((n, m), dtype=bool)
    for j, c in enumerate(ctx.cands):
        allowed[j, p.node_rank[c]] = True
    rngs = ctx.member_rngs(P)
    X = np.stack([r.random((n, m)) for r in rngs]) if n else np.zeros((P, 0, m))
    V = np.stack([(r.random((n, m)) - 0.5) * 0.2 for r in rngs]) if n else np.zeros((P, 0, m))
    vmax = 0.5

    def decode(keys):
        masked = np.where(allowed[None], keys, -np.inf)
        return p.node_order[np.argmax(masked, axis=2)] if n else np.zeros((keys.shape[0], 0), np.int64)

    vecs = decode(X)
    fits = ctx.fitness(vecs)
    pbest, pbest_fit, pbest_vec = X.copy(), fits.copy(), vecs.copy()
    g = ctx.offer(vecs, fits)
    gbest = X[g].copy()
    ctx.trace.append(ctx.best.fitness)
    for _ in range(ctx.iterations):
        if ctx.out_of_time():
            break
        for i in range(P):
            r1 = rngs[i].random((n, m))
            r2 = rngs[i].random((n, m))
            V[i] = (params.inertia * V[i] + params.cognitive * r1 * (pbest[i] - X[i])
                    + params.social * r2 * (gbest - X[i]))
        np.clip(V, -vmax, vmax, out=V)
        X += V
        np.clip(X, 0.0, 1.0, out=X)
        vecs = decode(X)
        fits = ctx.fitness(vecs)
        better = fits < pbest_fit
        pbest[better] = X[better]
        pbest_fit[better] = fits[better]
        pbest_vec[better] = vecs[better]
        prev = ctx.best.key()
        g = ctx.offer(pbest_vec, pbest_fit)
        if ctx.best.key() < prev:
            gbest = pbest[g].copy()
        ctx.trace.append(ctx.best.fitness)
    return ctx.result()


def solve_aco(instance: Instance, workflow: Workflow, params: MhParams = MhParams(),
              problem: Problem = None) -> SolveResult:
    """Ant colony: ants build assignments in topological order, picking a
    node with probability proportional to pheromone^a * (1/EFT)^b. EFTs
    enter as ratios to the best EFT of the step, so rescaling all times
    leaves the choice probabilities unchanged. After each round pheromone
    evaporates everywhere and the round's best ant reinforces its path."""
    ctx = _Context("aco", instance, workflow, params, problem)
    p = ctx.problem
    n, m, P = p.n, p.m, params.population_size
    rng = ctx.rng
    tau = np.ones((n, m))
    tl = kernels.Timeline(p)
    a, b = params.pheromone_exponent, params.heuristic_exponent
    rho = params.evaporation_rate
    for it in range(max(ctx.iterations, 1)):
        if it > 0 and ctx.out_of_time():
            break
        ants = np.zeros((P, n), dtype=np.int64)
        for ant in range(P):
            tl.reset()
            agg = np.zeros(m)
            for j in range(n):
                c = ctx.cands[j]
                if p.mode == 1:
                    u = p.use_base[j] * p.use_factor[c]
                    ok = agg[c] + u <= p.cap_cores[c]
                    if ok.any():
                        c = c[ok]
                if len(c) == 1:
                    k = int(c[0])
                else:
                    eft = tl.eft_row(j)[c]
                    if not np.isfinite(eft).all():
                        eft = np.array([tl.start_time(j, int(k)) + p.duration(j, int(k)) for k in c])
                    lo = eft.min()
                    eta = np.where(eft == lo, 1.0, np.divide(lo, eft, out=np.zeros_like(eft), where=eft > 0))
                    w = np.power(tau[j, c], a) * np.power(eta, b)
                    cum = np.cumsum(w)
                    pick = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
                    k = int(c[min(pick, len(c) - 1)])
                tl.place(j, k)
                agg[k] += p.use_base[j] * p.use_factor[k]
                ants[ant, j] = k
        fits = ctx.fitness(ants)
        i = ctx.offer(ants, fits)
        tau *= (1.0 - rho)
        if n:
            tau[np.arange(n), ants[i]] += rho
        ctx.trace.append(ctx.best.fitness)
    return ctx.result()
