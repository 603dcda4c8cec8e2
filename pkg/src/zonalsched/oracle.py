"""Exhaustive search over the GA's decode space, for small instances."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .scheduling import Schedule, SchedulerKind
from .solver import Problem
from .topology import Topology
from .workload import Task


class BudgetExceeded(ValueError):
    pass


class NoFeasibleSchedule(RuntimeError):
    pass


@dataclass(frozen=True)
class OracleBudget:
    max_enumerable: int = 200


@dataclass
class OracleResult:
    schedule: Schedule
    objective: float
    genes: np.ndarray
    enumerated: int


def brute_force_solve(
    tasks: Sequence[Task],
    topology: Topology,
    scheme: SchedulerKind | str,
    budget: OracleBudget | None = None,
    *,
    problem: Problem | None = None,
    batch: int = 4096,
) -> OracleResult:
    """Feasible optimum of ``scheme``; ties go to the lowest encoding."""
    budget = budget or OracleBudget()
    scheme = SchedulerKind(scheme)
    problem = problem or Problem(tasks, topology)
    space = problem.space
    total = space.size()
    if total > budget.max_enumerable:
        raise BudgetExceeded(f"{total} schedules exceed the budget of {budget.max_enumerable}")
    if not problem.tasks:
        return OracleResult(Schedule(()), 0.0, np.zeros(0, np.int64), 1)

    best_obj, best_genes = np.inf, None
    combos = itertools.product(*space.canonical_encodings())
    while True:
        chunk = list(itertools.islice(combos, batch))
        if not chunk:
            break
        genes = np.array([[g for pair in combo for g in pair] for combo in chunk], np.int64)
        obj, viol = problem.scheme_objective(genes, scheme)
        obj = np.where(viol == 0, obj, np.inf)
        i = int(np.argmin(obj))  # first minimum = lowest encoding in product order
        if obj[i] < best_obj:
            best_obj, best_genes = float(obj[i]), genes[i]
    if best_genes is None:
        raise NoFeasibleSchedule("every enumerated schedule violates a constraint")
    return OracleResult(space.decode(best_genes), best_obj, best_genes, total)
