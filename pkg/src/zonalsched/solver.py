"""Genetic algorithm over unit/path assignments.

A chromosome holds two genes per task, interleaved as
``[unit_0, path_0, unit_1, path_1, ...]``.  The unit gene indexes the task's
reachable computing units; the path gene selects among the candidate paths to
that unit (taken modulo the number of paths, so every gene vector in range
decodes).  Wireless resources are not encoded; evaluation books them.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernel
from .channel import ChannelConfig
from .scheduling import (
    _QUEUE_MODES, Assignment, NetworkModel, Schedule, SchedulerKind, task_arrays,
)
from .topology import NodeId, Path, Topology, enumerate_paths
from .workload import Task

log = logging.getLogger(__name__)

PENALTY = 1e6  # per violated constraint


@dataclass(frozen=True)
class GaParams:
    population: int = 1000
    elite_fraction: float = 0.20
    crossover_fraction: float = 0.80
    generations: int = 10
    mutation_rate: float = 0.20
    seed: int = 0

    def __post_init__(self):
        for name in ("elite_fraction", "crossover_fraction", "mutation_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if abs(self.elite_fraction + self.crossover_fraction - 1.0) > 1e-9:
            raise ValueError("elite and crossover fractions must sum to 1")
        if self.population < 1 or self.generations < 0:
            raise ValueError("population must be positive and generations nonnegative")

    @property
    def n_elite(self) -> int:
        return min(self.population, max(1, int(round(self.population * self.elite_fraction))))


@dataclass(frozen=True)
class Chromosome:
    genes: np.ndarray

    @property
    def unit_genes(self) -> np.ndarray:
        return self.genes[0::2]

    @property
    def path_genes(self) -> np.ndarray:
        return self.genes[1::2]


def _unit_order(origin: NodeId, topology: Topology) -> list[NodeId]:
    """Reachable units: local first, then by hop count, own zone before others."""
    hops = {}
    for unit in topology.units:
        paths = enumerate_paths(topology, origin, unit, 4) if unit != origin else [Path(origin, origin)]
        if paths:
            hops[unit] = paths[0].hops
    own = lambda u: 0 if u.kind == "ecu" and u.zone == origin.zone else 1
    return sorted(hops, key=lambda u: (hops[u], own(u), u.sort_key))


class SearchSpace:
    """Decodable (unit, path) options for a task batch on one topology."""

    def __init__(self, tasks: Sequence[Task], topology: Topology, max_hops: int = 4):
        self.tasks = list(tasks)
        self.topology = topology
        self.max_hops = max_hops
        self.options: list[tuple[NodeId, Path]] = []
        per_origin = {}
        for t in self.tasks:
            if t.origin in per_origin:
                continue
            units = []
            for unit in _unit_order(t.origin, topology):
                paths = enumerate_paths(topology, t.origin, unit, max_hops)
                if not paths:
                    continue
                start = len(self.options)
                self.options += [(unit, p) for p in paths]
                units.append((unit, start, len(paths)))
            if not units:
                raise ValueError(f"{t.origin} cannot reach any computing unit")
            per_origin[t.origin] = units
        self.per_origin = per_origin
        n = len(self.tasks)
        umax = max([1] + [len(v) for v in per_origin.values()])
        self.start = np.zeros((n, umax), np.int64)
        self.count = np.ones((n, umax), np.int64)
        self.n_units = np.zeros(n, np.int64)
        self.n_paths = np.zeros(n, np.int64)
        for j, t in enumerate(self.tasks):
            units = per_origin[t.origin]
            self.n_units[j] = len(units)
            self.n_paths[j] = max(c for _, _, c in units)
            for k, (_, start, count) in enumerate(units):
                self.start[j, k] = start
                self.count[j, k] = count
        # exclusive upper bound per gene, interleaved unit/path
        self.ranges = np.empty(2 * n, np.int64)
        self.ranges[0::2] = self.n_units
        self.ranges[1::2] = self.n_paths

    def option_ids(self, genes: np.ndarray) -> np.ndarray:
        genes = np.atleast_2d(genes)
        ug, pg = genes[:, 0::2], genes[:, 1::2]
        rows = np.arange(len(self.tasks))
        return self.start[rows, ug] + pg % self.count[rows, ug]

    def decode(self, genes) -> Schedule:
        ids = self.option_ids(np.asarray(genes))[0]
        return Schedule(tuple(
            Assignment(t.id, self.options[g][0], self.options[g][1]) for t, g in zip(self.tasks, ids)
        ))

    def size(self) -> int:
        """Number of distinct decodable schedules."""
        total = 1
        for t in self.tasks:
            total *= sum(c for _, _, c in self.per_origin[t.origin])
        return total

    def canonical_encodings(self):
        """Per task, the canonical (unit gene, path gene) pairs in lexicographic order."""
        return [
            [(k, p) for k, (_, _, c) in enumerate(self.per_origin[t.origin]) for p in range(c)]
            for t in self.tasks
        ]


class Problem:
    """Everything the fitness function needs for one instance and scheme-independent."""

    def __init__(self, tasks: Sequence[Task], topology: Topology, model: NetworkModel | None = None,
                 channel_config: ChannelConfig | None = None, max_hops: int = 4):
        self.tasks = list(tasks)
        self.topology = topology
        self.model = model or NetworkModel(topology, channel_config)
        self.space = SearchSpace(tasks, topology, max_hops)
        self.table = self.model.lower(self.space.options)
        self.arrays = task_arrays(self.tasks)
        self.evaluations = 0

    def objectives(self, genes: np.ndarray, simulate: bool = True):
        """(deterministic, total_time, distance, violations) for each row."""
        opts = np.ascontiguousarray(self.space.option_ids(genes))
        self.evaluations += len(opts)
        if opts.shape[1] == 0:
            z = np.zeros(len(opts))
            return z, z.copy(), z.copy(), np.zeros(len(opts), np.int64)
        m, tb = self.model, self.table
        return _kernel.evaluate_population(
            opts, *self.arrays, tb.unit, tb.nhops, tb.hop_res, tb.hop_rres, tb.hop_link, tb.hop_rate,
            m.res_is_band, m.unit_speed, m.unit_cap, m.cum_bits, m.channel_config.slot_duration,
            _QUEUE_MODES[m.queue], tb.reliability, tb.distance, simulate)

    def scheme_objective(self, genes: np.ndarray, scheme: SchedulerKind | str):
        """(objective, violations) per row for ``scheme``."""
        scheme = SchedulerKind(scheme)
        if scheme is SchedulerKind.BASELINE:
            raise ValueError("Baseline is a fixed mapping, not an optimization scheme")
        det, tsum, dist, viol = self.objectives(genes, simulate=scheme is not SchedulerKind.SHORTEST)
        obj = {SchedulerKind.DETERMINISTIC: det, SchedulerKind.MINIMUM: tsum, SchedulerKind.SHORTEST: dist}[scheme]
        return obj, viol


def fitness(chromosome: Chromosome | np.ndarray, scheme: SchedulerKind | str, problem: Problem) -> float:
    genes = chromosome.genes if isinstance(chromosome, Chromosome) else np.asarray(chromosome)
    obj, viol = problem.scheme_objective(genes[None, :], scheme)
    return float(obj[0] + PENALTY * viol[0])


def crossover_batch(pa: np.ndarray, pb: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Uniform crossover, row by row: each gene from either parent with probability 1/2."""
    if pa.shape != pb.shape:
        raise ValueError("parents differ in length")
    return np.where(rng.random(pa.shape) < 0.5, pa, pb)


def mutate_batch(pop: np.ndarray, rate: float, ranges: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Resample each gene uniformly within its range with probability ``rate``."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError("mutation rate must lie in [0, 1]")
    hit = rng.random(pop.shape) < rate
    fresh = (rng.random(pop.shape) * ranges).astype(np.int64)
    return np.where(hit, fresh, pop)


def crossover(parent_a: Chromosome, parent_b: Chromosome, rng: np.random.Generator) -> Chromosome:
    return Chromosome(crossover_batch(parent_a.genes[None], parent_b.genes[None], rng)[0])


def mutate(chromosome: Chromosome, rate: float, rng: np.random.Generator, ranges: np.ndarray) -> Chromosome:
    return Chromosome(mutate_batch(chromosome.genes[None], rate, ranges, rng)[0])


@dataclass
class SolveResult:
    schedule: Schedule
    objective: float
    fitness: float
    feasible: bool
    chromosome: Chromosome
    trace: list = field(default_factory=list)  # best fitness per generation, initial first
    evaluations: int = 0


def _rank(pop: np.ndarray, fit: np.ndarray) -> np.ndarray:
    # primary key fitness, ties broken by lexicographic gene order
    keys = np.vstack([pop.T[::-1], fit[None, :]])
    return np.lexsort(keys)


def solve(
    tasks: Sequence[Task],
    topology: Topology,
    scheme: SchedulerKind | str,
    params: GaParams | None = None,
    *,
    problem: Problem | None = None,
    channel_config: ChannelConfig | None = None,
    initial: Sequence[np.ndarray] = (),
) -> SolveResult:
    """Minimize the scheme's objective plus constraint penalties.

    Generation 0 is random (plus any ``initial`` gene vectors); each later
    generation keeps the elite and fills the rest with mutated uniform
    crossovers of parents drawn uniformly from the elite.
    """
    params = params or GaParams()
    scheme = SchedulerKind(scheme)
    if scheme is SchedulerKind.BASELINE:
        raise ValueError("Baseline bypasses the solver")
    problem = problem or Problem(tasks, topology, channel_config=channel_config)
    space = problem.space
    ranges = space.ranges
    start_evals = problem.evaluations

    def score(pop):
        obj, viol = problem.scheme_objective(pop, scheme)
        return obj + PENALTY * viol

    rng = np.random.default_rng([params.seed, 0])
    pop = (rng.random((params.population, len(ranges))) * ranges).astype(np.int64)
    for i, genes in enumerate(initial[: params.population]):
        pop[i] = genes
    fit = score(pop)
    order = _rank(pop, fit)
    pop, fit = pop[order], fit[order]
    trace = [float(fit[0])]

    n_elite = params.n_elite
    n_child = params.population - n_elite
    for gen in range(1, params.generations + 1):
        rng = np.random.default_rng([params.seed, gen])
        elite = pop[:n_elite]
        if n_child:
            ia = rng.integers(n_elite, size=n_child)
            ib = rng.integers(n_elite, size=n_child)
            children = crossover_batch(elite[ia], elite[ib], rng)
            children = mutate_batch(children, params.mutation_rate, ranges, rng)
            pop = np.vstack([elite, children])
            fit = np.concatenate([fit[:n_elite], score(children)])
            order = _rank(pop, fit)
            pop, fit = pop[order], fit[order]
        trace.append(float(fit[0]))
        log.debug("generation %d best %.6g", gen, fit[0])

    best = pop[0]
    obj, viol = problem.scheme_objective(best[None, :], scheme)
    return SolveResult(
        schedule=space.decode(best),
        objective=float(obj[0]),
        fitness=float(fit[0]),
        feasible=bool(viol[0] == 0),
        chromosome=Chromosome(best.copy()),
        trace=trace,
        evaluations=problem.evaluations - start_evals,
    )
