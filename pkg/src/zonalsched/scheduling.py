"""Schedules, their timed evaluation, constraints and objective functions.

A schedule assigns every task to one computing unit over one forward path;
results come back over the reversed path.  Evaluation runs a discrete-event
simulation in which

* each direction of a wired link, and each wireless band, carries one
  transfer at a time (store-and-forward over multi-hop paths);
* a wireless hop occupies its whole band for whole slots, starting at a slot
  boundary; slots whose delivery draw fails are wasted and the transfer
  continues;
* a computing unit processes one task at a time.

Whenever a link, band or unit frees up it serves the waiting request chosen by
the dispatch rule: earliest absolute deadline (``"edf"``), request order
(``"fifo"``), or smallest job first (``"spt"``: transfer size on links, demand
on units).  ``"none"`` gives units unlimited parallelism and serves links in
request order.

Each scheme has a default dispatch rule matching what it optimizes, see
``SCHEME_QUEUES``.
"""
from __future__ import annotations

import copy
import enum
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernel
from .channel import BandId, ChannelConfig, FadingProcess, SlotCapExceeded, build_channel_table
from .topology import ComputeSpec, Link, NodeId, Path, Topology, path_distance, path_reliability
from .workload import Task

_QUEUE_MODES = {
    "none": _kernel.QUEUE_NONE, "edf": _kernel.QUEUE_EDF,
    "fifo": _kernel.QUEUE_FIFO, "spt": _kernel.QUEUE_SPT,
}


class SchedulerKind(str, enum.Enum):
    DETERMINISTIC = "deterministic"
    MINIMUM = "minimum"
    SHORTEST = "shortest"
    BASELINE = "baseline"


# deadline-driven schemes serve the earliest deadline, the latency minimizer
# the shortest job, and the topology-only scheme serves in arrival order
SCHEME_QUEUES = {
    SchedulerKind.DETERMINISTIC: "edf",
    SchedulerKind.MINIMUM: "spt",
    SchedulerKind.SHORTEST: "fifo",
    SchedulerKind.BASELINE: "edf",
}


@dataclass(frozen=True)
class Assignment:
    task_id: int
    unit: NodeId
    forward_path: Path

    def __post_init__(self):
        if not self.unit.is_unit:
            raise ValueError(f"{self.unit} is not a computing unit")
        if self.forward_path.dst != self.unit:
            raise ValueError("forward path must end at the assigned unit")

    @property
    def return_path(self) -> Path:
        return self.forward_path.reversed()


@dataclass(frozen=True)
class Schedule:
    assignments: tuple[Assignment, ...]

    def __post_init__(self):
        object.__setattr__(self, "assignments", tuple(self.assignments))

    def by_task(self) -> dict[int, Assignment]:
        return {a.task_id: a for a in self.assignments}

    def __len__(self):
        return len(self.assignments)


@dataclass(frozen=True)
class Booking:
    task_id: int
    direction: str  # "forward" | "return"
    hop: int
    link: str
    resource: str
    start: float
    end: float
    wireless: bool = False
    start_slot: int = -1
    slots: int = 0
    retransmission_slots: int = 0


@dataclass(frozen=True)
class TaskTiming:
    task_id: int
    unit: NodeId
    path: str
    t_comm: float  # forward transfer, including link waits
    t_proc: float  # time at the unit: queueing wait + processing
    t_return: float
    total: float
    deadline: float
    satisfied: bool
    reliability: float
    queue_wait: float


@dataclass
class EvaluatedSchedule:
    timings: list[TaskTiming]
    used_cycles: dict
    bookings: list[Booking] = field(default_factory=list)
    band_occupancy: dict = field(default_factory=dict)
    overflow: int = 0

    @property
    def totals(self) -> np.ndarray:
        return np.array([t.total for t in self.timings])

    @property
    def satisfied(self) -> np.ndarray:
        return np.array([t.satisfied for t in self.timings], dtype=bool)

    def timing(self, task_id: int) -> TaskTiming:
        for t in self.timings:
            if t.task_id == task_id:
                return t
        raise KeyError(task_id)


@dataclass(frozen=True)
class Violation:
    constraint: int  # 9, 10, 11 or 12
    message: str


@dataclass
class OptionTable:
    """Numeric lowering of (unit, forward path) options for the kernel."""

    options: list
    unit: np.ndarray
    nhops: np.ndarray
    hop_res: np.ndarray
    hop_rres: np.ndarray
    hop_link: np.ndarray
    hop_rate: np.ndarray
    reliability: np.ndarray
    distance: np.ndarray


class NetworkModel:
    """Resource indexing and channel realization for one topology.

    Wired link ``i`` owns resources ``2i`` (a->b) and ``2i+1`` (b->a); bands
    follow.  The channel table is built once per model, so reuse a model to
    evaluate many schedules over the same channel realization.
    """

    def __init__(self, topology: Topology, channel_config: ChannelConfig | None = None,
                 fading: FadingProcess | None = None, queue: str = "edf", channel_seed: int = 0):
        if queue not in _QUEUE_MODES:
            raise ValueError(f"unknown queue discipline {queue!r}")
        self.topology = topology
        self.channel_config = channel_config or ChannelConfig()
        self.fading = fading or FadingProcess.from_config(self.channel_config, channel_seed)
        self.queue = queue
        self.units = list(topology.units)
        self.unit_index = {u: i for i, u in enumerate(self.units)}
        specs = [topology.compute_specs[u] for u in self.units]
        self.unit_speed = np.array([s.speed for s in specs])
        self.unit_cap = np.array([s.max_capacity for s in specs])

        n_links = len(topology.links)
        bands = sorted({l.band for l in topology.links if l.wireless})
        self.bands = bands
        self.band_res = {b: 2 * n_links + i for i, b in enumerate(bands)}
        self.res_is_band = np.zeros(2 * n_links + len(bands), dtype=np.bool_)
        self.res_is_band[2 * n_links:] = True
        self.res_names = []
        for l in topology.links:
            self.res_names += [f"{l.a}>{l.b}", f"{l.b}>{l.a}"]
        self.res_names += [str(b) for b in bands]

        wl = [l for l in topology.links if l.wireless]
        self.wireless_row = {l: r for r, l in enumerate(wl)}
        if wl:
            self.channel = build_channel_table(
                wl, [topology.link_index(l) for l in wl], self.channel_config, self.fading)
            self.cum_bits = self.channel.cum_bits
        else:
            self.channel = None
            self.cum_bits = np.zeros((0, 1))

    def with_queue(self, queue: str) -> "NetworkModel":
        """Same network and channel realization, different unit discipline."""
        if queue not in _QUEUE_MODES:
            raise ValueError(f"unknown queue discipline {queue!r}")
        other = copy.copy(self)
        other.queue = queue
        return other

    def lower(self, options: Sequence[tuple[NodeId, Path]]) -> OptionTable:
        hmax = max([1] + [p.hops for _, p in options])
        n = len(options)
        hop_res = np.zeros((n, hmax), np.int64)
        hop_rres = np.zeros((n, hmax), np.int64)
        hop_link = np.full((n, hmax), -1, np.int64)
        hop_rate = np.ones((n, hmax))
        for g, (unit, path) in enumerate(options):
            node = path.src
            for h, link in enumerate(path.links):
                i = self.topology.link_index(link)
                if link.wireless:
                    hop_res[g, h] = hop_rres[g, h] = self.band_res[link.band]
                    hop_link[g, h] = self.wireless_row[link]
                else:
                    fwd = 2 * i if node == link.a else 2 * i + 1
                    hop_res[g, h] = fwd
                    hop_rres[g, h] = fwd ^ 1
                    hop_rate[g, h] = link.rate
                node = link.other(node)
        return OptionTable(
            list(options),
            np.array([self.unit_index[u] for u, _ in options], np.int64),
            np.array([p.hops for _, p in options], np.int64),
            hop_res, hop_rres, hop_link, hop_rate,
            np.array([path_reliability(p) for _, p in options]),
            np.array([path_distance(p) for _, p in options]),
        )


def task_arrays(tasks: Sequence[Task]):
    return (
        np.array([t.gen_time for t in tasks], dtype=float),
        np.array([t.size for t in tasks], dtype=float),
        np.array([t.result_size for t in tasks], dtype=float),
        np.array([t.compute_demand for t in tasks], dtype=float),
        np.array([t.deadline for t in tasks], dtype=float),
    )


def processing_time(task: Task, compute_spec: ComputeSpec) -> float:
    return task.compute_demand / compute_spec.speed


def evaluate_schedule(
    schedule: Schedule,
    tasks: Sequence[Task],
    topology: Topology,
    channel_config: ChannelConfig | None = None,
    fading: FadingProcess | None = None,
    *,
    model: NetworkModel | None = None,
    queue: str = "edf",
    strict: bool = True,
) -> EvaluatedSchedule:
    """Simulate ``schedule`` and report per-task timing.

    Pass ``model`` to reuse a channel realization across evaluations.  With
    ``strict`` a transfer exceeding the slot cap raises SlotCapExceeded;
    otherwise the affected tasks get infinite completion time.
    """
    if model is None:
        model = NetworkModel(topology, channel_config, fading, queue)
    elif model.topology is not topology:
        raise ValueError("model was built for a different topology")
    by_task = _structural_check(schedule, tasks)
    options = [(by_task[t.id].unit, by_task[t.id].forward_path) for t in tasks]
    table = model.lower(options)
    opt_ids = np.arange(len(tasks), dtype=np.int64)
    gen, size, rsize, demand, deadline = task_arrays(tasks)
    n, hmax = len(tasks), table.hop_res.shape[1]
    arrive, pstart, pend, done = (np.empty(n) for _ in range(4))
    hstart = np.empty((n, 2 * hmax))
    hend = np.empty((n, 2 * hmax))
    overflow = 0
    if n:
        overflow = _kernel.simulate(
            opt_ids, gen, size, rsize, demand, deadline,
            table.unit, table.nhops, table.hop_res, table.hop_rres, table.hop_link, table.hop_rate,
            model.res_is_band, model.unit_speed, model.cum_bits, model.channel_config.slot_duration,
            _QUEUE_MODES[model.queue], arrive, pstart, pend, done, hstart, hend)
    if overflow and strict:
        raise SlotCapExceeded(f"{overflow} wireless transfers exceeded {model.channel_config.slot_cap} slots")

    timings, bookings = [], []
    used = {u: 0.0 for u in model.units}
    occupancy = {b: 0 for b in model.bands}
    slot = model.channel_config.slot_duration
    for j, task in enumerate(tasks):
        a = by_task[task.id]
        used[a.unit] += task.compute_demand
        if done[j] == np.inf:
            t_c = t_p = t_r = total = np.inf
        else:
            t_c = arrive[j] - task.gen_time
            t_p = pend[j] - arrive[j]
            t_r = done[j] - pend[j]
            total = t_c + t_p + t_r
        wait = pstart[j] - arrive[j] if pstart[j] >= 0 else np.inf
        timings.append(TaskTiming(
            task.id, a.unit, str(a.forward_path), t_c, t_p, t_r, total, task.deadline,
            bool(total <= task.deadline), path_reliability(a.forward_path), wait))
        for direction, path, offset in (("forward", a.forward_path, 0), ("return", a.return_path, hmax)):
            node = path.src
            for h, link in enumerate(path.links):
                start, end = hstart[j, offset + h], hend[j, offset + h]
                if start < 0:
                    break
                nxt = link.other(node)
                if link.wireless:
                    s0 = int(round(start / slot))
                    s1 = int(round(end / slot)) if np.isfinite(end) else model.channel_config.slot_cap
                    row = model.wireless_row[link]
                    failed = int(model.channel.cum_failed[row, s1] - model.channel.cum_failed[row, s0])
                    occupancy[link.band] += s1 - s0
                    bookings.append(Booking(task.id, direction, h, str(link), str(link.band), start, end,
                                            True, s0, s1 - s0, failed))
                else:
                    bookings.append(Booking(task.id, direction, h, str(link), f"{node}>{nxt}", start, end))
                node = nxt
    return EvaluatedSchedule(timings, used, bookings, occupancy, int(overflow))


def _structural_check(schedule: Schedule, tasks: Sequence[Task]) -> dict[int, Assignment]:
    counts = Counter(a.task_id for a in schedule.assignments)
    ids = [t.id for t in tasks]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate task ids")
    dup = [i for i, c in counts.items() if c > 1]
    if dup:
        raise ValueError(f"tasks assigned more than once: {dup}")
    missing = set(ids) - set(counts)
    if missing:
        raise ValueError(f"tasks without assignment: {sorted(missing)}")
    by_task = schedule.by_task()
    for t in tasks:
        if by_task[t.id].forward_path.src != t.origin:
            raise ValueError(f"task {t.id}: forward path does not start at its origin {t.origin}")
    return by_task


def penalty_beta(deadline_ratio: float, selected_path_reliability: float) -> float:
    if deadline_ratio < 0:
        raise ValueError("deadline ratio must be nonnegative")
    if deadline_ratio > 1.0:
        return 1.0
    return 1.0 - selected_path_reliability


def objective_deterministic(evaluated: EvaluatedSchedule, tasks: Sequence[Task]) -> float:
    by_id = {t.id: t for t in tasks}
    missing = set(by_id) - {t.task_id for t in evaluated.timings}
    if missing:
        raise ValueError(f"evaluation lacks tasks {sorted(missing)}")
    return float(sum(
        penalty_beta(tm.total / by_id[tm.task_id].deadline, tm.reliability) for tm in evaluated.timings
    ))


def objective_shortest(schedule: Schedule) -> float:
    return float(sum(path_distance(a.forward_path) for a in schedule.assignments))


def objective_minimum(evaluated: EvaluatedSchedule) -> float:
    return float(sum(t.total for t in evaluated.timings))


def objective(scheme: SchedulerKind | str, schedule: Schedule, evaluated: EvaluatedSchedule,
              tasks: Sequence[Task]) -> float:
    """Objective value of ``scheme``; Baseline reports the deterministic score."""
    scheme = SchedulerKind(scheme)
    if scheme is SchedulerKind.SHORTEST:
        return objective_shortest(schedule)
    if scheme is SchedulerKind.MINIMUM:
        return objective_minimum(evaluated)
    return objective_deterministic(evaluated, tasks)


def baseline_schedule(tasks: Sequence[Task], topology: Topology) -> Schedule:
    """Static mapping: sensors to their own zone ECU, units process locally."""
    assignments = []
    for t in tasks:
        if t.origin.is_unit:
            assignments.append(Assignment(t.id, t.origin, Path(t.origin, t.origin)))
            continue
        ecu = NodeId.ecu(t.origin.zone)
        link = topology.link_between(t.origin, ecu)
        if link is None:
            raise ValueError(f"{t.origin} has no direct link to {ecu}")
        assignments.append(Assignment(t.id, ecu, Path(t.origin, ecu, (link,))))
    return Schedule(tuple(assignments))


def check_constraints(schedule: Schedule, evaluated: EvaluatedSchedule, topology: Topology,
                      tasks: Sequence[Task] | None = None) -> list[Violation]:
    """Return every violated constraint; an empty list means feasible.

    9: one unit per task.  10: no (band, slot) cell used by two transfers.
    11: no wired link direction carries two transfers at once.
    12: assigned cycles per unit within its capacity window.
    """
    out: list[Violation] = []
    per_task = defaultdict(set)
    for a in schedule.assignments:
        per_task[a.task_id].add(a.unit)
        if a.unit not in topology.compute_specs:
            out.append(Violation(9, f"task {a.task_id} assigned to non-unit {a.unit}"))
    for tid, units in sorted(per_task.items()):
        n_assign = sum(1 for a in schedule.assignments if a.task_id == tid)
        if n_assign != 1:
            out.append(Violation(9, f"task {tid} has {n_assign} assignments ({', '.join(map(str, sorted(units)))})"))
    expected = {t.task_id for t in evaluated.timings} if tasks is None else {t.id for t in tasks}
    for tid in sorted(expected - set(per_task)):
        out.append(Violation(9, f"task {tid} has no assignment"))

    wireless = defaultdict(list)
    wired = defaultdict(list)
    for b in evaluated.bookings:
        if b.wireless:
            wireless[b.resource].append((b.start_slot, b.start_slot + b.slots, b))
        else:
            wired[b.resource].append((b.start, b.end, b))
    for res, spans in sorted(wireless.items()):
        for (s0, e0, b0), (s1, e1, b1) in _overlaps(spans, tol=0):
            out.append(Violation(10, f"band {res}: tasks {b0.task_id} and {b1.task_id} share slots {s1}..{min(e0, e1) - 1}"))
    for res, spans in sorted(wired.items()):
        for (s0, e0, b0), (s1, e1, b1) in _overlaps(spans, tol=1e-12):
            out.append(Violation(11, f"link {res}: tasks {b0.task_id} and {b1.task_id} overlap in time"))

    if tasks is not None:
        demand = {t.id: t.compute_demand for t in tasks}
        used = defaultdict(float)
        for a in schedule.assignments:
            used[a.unit] += demand[a.task_id]
    else:
        used = evaluated.used_cycles
    for unit, cycles in sorted(used.items()):
        spec = topology.compute_specs.get(unit)
        if spec is not None and cycles > spec.max_capacity * (1 + 1e-12):
            out.append(Violation(12, f"{unit}: {cycles / 1e6:.1f} Mcycles exceed {spec.max_capacity / 1e6:.1f}"))
    return out


def _overlaps(spans, tol):
    spans = sorted(spans, key=lambda s: (s[0], s[1], s[2].task_id))
    latest = None  # span reaching furthest so far
    for cur in spans:
        if latest is not None and cur[0] < latest[1] - tol:
            yield latest, cur
        if latest is None or cur[1] > latest[1]:
            latest = cur
