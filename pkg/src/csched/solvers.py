"""One entry point for every technique, keyed by its CLI name."""

from __future__ import annotations

from typing import Optional

from .exact import SolveConfig, solve_exact
from .heuristics import solve_heft, solve_olb
from .metaheur import MhParams, solve_aco, solve_ga, solve_pso, solve_sa
from .model import Instance, SolveResult, Workflow
from .oracle import brute_force_optimum

TECHNIQUES = ("milp", "heft", "olb", "ga", "sa", "pso", "aco", "brute")
METAHEURISTICS = ("ga", "sa", "pso", "aco")

_MH = {"ga": solve_ga, "sa": solve_sa, "pso": solve_pso, "aco": solve_aco}


def run_technique(technique: str, instance: Instance, workflow: Workflow, seed: int = 42,
                  time_budget: Optional[float] = None, problem=None) -> SolveResult:
    if technique == "milp":
        return solve_exact(instance, workflow, SolveConfig(time_budget=time_budget), problem=problem)
    if technique == "heft":
        return solve_heft(instance, workflow, problem=problem)
    if technique == "olb":
        return solve_olb(instance, workflow, problem=problem)
    if technique in _MH:
        return _MH[technique](instance, workflow, MhParams(seed=seed, time_budget=time_budget), problem=problem)
    if technique == "brute":
        return brute_force_optimum(instance, workflow)
    raise ValueError(f"unknown technique {technique!r}")
