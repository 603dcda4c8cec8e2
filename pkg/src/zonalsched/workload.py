"""Task batches and link reliabilities."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .topology import LinkClass, NodeId, Topology


@dataclass(frozen=True)
class Task:
    id: int
    origin: NodeId
    compute_demand: float  # cycles
    size: float  # bits
    result_size: float  # bits
    gen_time: float  # seconds
    deadline: float  # seconds, relative to gen_time

    def to_dict(self) -> dict:
        d = asdict(self)
        d["origin"] = str(self.origin)
        return d


@dataclass(frozen=True)
class WorkloadConfig:
    n_tasks: int = 45
    origin_mix: tuple[float, float, float] = (0.70, 0.15, 0.15)  # sensor, ECU, HPCU
    demand_range: tuple[float, float] = (5e6, 15e6)
    size_range: tuple[float, float] = (0.5e6, 1.5e6)
    result_fraction: float = 0.15
    deadline_range: tuple[float, float] = (40e-3, 100e-3)
    seed: int = 0
    # spread generation times uniformly over [0, stagger_window) instead of a batch at t=0
    stagger: bool = False
    stagger_window: float = 0.1

    def __post_init__(self):
        if self.n_tasks < 0:
            raise ValueError("n_tasks must be nonnegative")
        if len(self.origin_mix) != 3 or any(f < 0 for f in self.origin_mix):
            raise ValueError("origin_mix needs three nonnegative fractions")
        if abs(sum(self.origin_mix) - 1.0) > 1e-9:
            raise ValueError("origin_mix must sum to 1")
        for name in ("demand_range", "size_range", "deadline_range"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise ValueError(f"{name} must satisfy 0 < lo <= hi")
        if not 0 < self.result_fraction:
            raise ValueError("result_fraction must be positive")


def generate_tasks(config: WorkloadConfig, topology: Topology, seed: int | None = None) -> list[Task]:
    """Draw ``config.n_tasks`` tasks; task ``n`` uses its own random substream.

    Because every task has its own substream, growing ``n_tasks`` keeps the
    earlier tasks unchanged.
    """
    seed = config.seed if seed is None else seed
    classes = (
        list(topology.sensors),
        list(topology.ecus),
        [topology.hpcu],
    )
    for frac, pool, name in zip(config.origin_mix, classes, ("sensor", "ECU", "HPCU")):
        if frac > 0 and not pool:
            raise ValueError(f"origin mix requests {name} tasks but the topology has none")
    cum_mix = np.cumsum(config.origin_mix)
    tasks = []
    for n in range(config.n_tasks):
        u = np.random.default_rng([seed, n]).random(6)
        cls = min(int(np.searchsorted(cum_mix, u[0], side="right")), 2)
        pool = classes[cls]
        origin = pool[min(int(u[1] * len(pool)), len(pool) - 1)]
        demand = _uniform(config.demand_range, u[2])
        size = _uniform(config.size_range, u[3])
        deadline = _uniform(config.deadline_range, u[4])
        gen_time = u[5] * config.stagger_window if config.stagger else 0.0
        tasks.append(Task(n, origin, demand, size, config.result_fraction * size, gen_time, deadline))
    return tasks


def _uniform(bounds, u):
    lo, hi = bounds
    return lo + (hi - lo) * float(u)


def sample_link_reliability(
    link_class: LinkClass | str,
    rng: np.random.Generator,
    in_zone_range: tuple[float, float] = (0.95, 1.0),
    cross_range: tuple[float, float] = (0.90, 1.0),
) -> float:
    link_class = LinkClass(link_class)
    if link_class is LinkClass.WIRED:
        return 1.0
    lo, hi = in_zone_range if link_class is LinkClass.IN_ZONE_SENSOR else cross_range
    return float(rng.uniform(lo, hi))
