"""Experiment configuration, metrics, sweeps and CSV reports.

Config files are flat ``key = value`` text with dotted keys.  Ranges are
written ``lo..hi`` and integer sweeps ``lo..hi:step``; lists are comma
separated.  Every key and its default is listed in ``DEFAULTS``.
"""
from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path as FsPath
from typing import Iterable, Sequence

import numpy as np

from .channel import ChannelConfig
from .scheduling import (
    _QUEUE_MODES, SCHEME_QUEUES, EvaluatedSchedule, NetworkModel, SchedulerKind,
    baseline_schedule, evaluate_schedule, objective,
)
from .solver import GaParams, Problem, solve
from .topology import ComputeSpec, MediumMode, NodeId, TopologyKind, TopologyParams, build_topology
from .workload import WorkloadConfig, generate_tasks

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


# key -> (default, description)
DEFAULTS: dict[str, tuple[str, str]] = {
    "experiment.topologies": ("tree,basic_mesh,cross_zone_mesh,centralized_mesh", "topology kinds to sweep"),
    "experiment.media": ("wired", "wired and/or hybrid"),
    "experiment.schemes": ("baseline,shortest,minimum,deterministic", "schemes to run"),
    "experiment.load_points": ("5..60:5", "task counts N"),
    "experiment.replications": ("20", "seeds per cell"),
    "experiment.base_seed": ("1", "replication r uses seed base_seed + r"),
    "experiment.max_hops": ("4", "longest candidate path"),
    "output.dir": ("results", "report directory"),
    "output.per_task": ("true", "write per_task.csv"),
    "output.wall_time": ("true", "record wall time (false gives byte-identical reruns)"),
    "topology.sensors_per_zone": ("9,9,9,9", "sensors in zones 1..4"),
    "topology.wired_rate_gbps": ("1", "wired link rate"),
    "topology.ecu_ghz": ("1", "zone ECU speed"),
    "topology.hpcu_ghz": ("4", "HPCU speed"),
    "topology.capacity_window_ms": ("100", "window T of the unit capacity P*T"),
    "topology.in_zone_reliability": ("0.95..1", "sensor to own-zone ECU reliability"),
    "topology.cross_reliability": ("0.90..1", "cross-zone and sensor to HPCU reliability"),
    "topology.distance.sensor_ecu": ("1", "distance weight, sensor to own ECU"),
    "topology.distance.sensor_cross": ("1", "distance weight, sensor to cross-zone ECU"),
    "topology.distance.sensor_hpcu": ("1", "distance weight, sensor to HPCU"),
    "topology.distance.ecu_ecu": ("1", "distance weight, ECU ring link"),
    "topology.distance.ecu_hpcu": ("1", "distance weight, ECU to HPCU"),
    "workload.origin_mix": ("0.70,0.15,0.15", "sensor, ECU, HPCU task fractions"),
    "workload.demand_mcycles": ("5..15", "computing demand"),
    "workload.size_mbits": ("0.5..1.5", "task size"),
    "workload.result_fraction": ("0.15", "result size over task size"),
    "workload.deadline_ms": ("40..100", "deadline"),
    "workload.stagger_ms": ("0", "spread generation times over this window (0 = batch at t=0)"),
    "channel.ber": ("1e-5", "bit error rate"),
    "channel.mean_sinr_db": ("30", "mean SINR"),
    "channel.zone_bandwidth_mhz": ("20", "bandwidth per zone band"),
    "channel.hpcu_bandwidth_mhz": ("20", "bandwidth of the HPCU band"),
    "channel.resource_khz": ("360", "bandwidth of one resource (12 x 30 kHz)"),
    "channel.slot_ms": ("0.5", "slot duration"),
    "channel.slot_cap": ("2000", "longest wireless transfer in slots"),
    "channel.fading": ("rayleigh", "rayleigh or frozen"),
    "ga.population": ("1000", "candidates per generation"),
    "ga.elite_fraction": ("0.2", "kept each generation"),
    "ga.crossover_fraction": ("0.8", "filled by crossover"),
    "ga.generations": ("10", "generations after the initial one"),
    "ga.mutation_rate": ("0.2", "per-gene mutation probability"),
    "ga.seed_home": ("true", "include the own-zone mapping in generation 0"),
    "queue.baseline": (SCHEME_QUEUES[SchedulerKind.BASELINE], "unit dispatch rule"),
    "queue.shortest": (SCHEME_QUEUES[SchedulerKind.SHORTEST], "unit dispatch rule"),
    "queue.minimum": (SCHEME_QUEUES[SchedulerKind.MINIMUM], "unit dispatch rule"),
    "queue.deterministic": (SCHEME_QUEUES[SchedulerKind.DETERMINISTIC], "unit dispatch rule"),
}


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Read ``key = value`` lines; unknown or repeated keys are errors."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        if not value:
            raise ConfigError(f"{source}:{lineno}: empty value for {key!r}")
        values[key] = value
    return values


def _floats(v: str, n: int | None = None) -> tuple[float, ...]:
    out = tuple(float(x) for x in v.split(","))
    if n is not None and len(out) != n:
        raise ValueError(f"expected {n} values")
    return out


def _range(v: str) -> tuple[float, float]:
    if ".." not in v:
        x = float(v)
        return x, x
    lo, hi = v.split("..", 1)
    lo, hi = float(lo), float(hi)
    if lo > hi:
        raise ValueError("range bounds reversed")
    return lo, hi


def _int_list(v: str) -> tuple[int, ...]:
    out = []
    for part in v.split(","):
        part = part.strip()
        if ".." in part:
            span, _, step = part.partition(":")
            lo, hi = (int(x) for x in span.split(".."))
            step = int(step) if step else 1
            if step <= 0:
                raise ValueError("step must be positive")
            out += list(range(lo, hi + 1, step))
        else:
            out.append(int(part))
    return tuple(out)


def _bool(v: str) -> bool:
    low = v.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _names(v: str, enum_cls):
    return tuple(enum_cls(x.strip()) for x in v.split(",") if x.strip())


@dataclass(frozen=True)
class ExperimentConfig:
    topologies: tuple[TopologyKind, ...]
    media: tuple[MediumMode, ...]
    schemes: tuple[SchedulerKind, ...]
    load_points: tuple[int, ...]
    replications: int = 20
    base_seed: int = 1
    max_hops: int = 4
    sensors_per_zone: tuple[int, ...] = (9, 9, 9, 9)
    topology_params: TopologyParams = field(default_factory=TopologyParams)
    workload: WorkloadConfig = field(default_factory=WorkloadConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    ga: GaParams = field(default_factory=GaParams)
    seed_home: bool = True
    queues: dict = field(default_factory=lambda: dict(SCHEME_QUEUES))
    out_dir: str = "results"
    per_task: bool = True
    wall_time: bool = True

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigError("replications must be at least 1")
        if not self.load_points or any(n <= 0 for n in self.load_points):
            raise ConfigError("load points must be positive")
        if list(self.load_points) != sorted(set(self.load_points)):
            raise ConfigError("load points must be strictly ascending")
        if not (self.topologies and self.media and self.schemes):
            raise ConfigError("need at least one topology, medium and scheme")
        for s, q in self.queues.items():
            if q not in _QUEUE_MODES:
                raise ConfigError(f"unknown dispatch rule {q!r} for {s}")

    @classmethod
    def from_mapping(cls, values: dict[str, str]) -> "ExperimentConfig":
        """Build from string values; keys missing from ``values`` take their defaults."""
        unknown = set(values) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown keys: {', '.join(sorted(unknown))}")
        v = {k: d for k, (d, _) in DEFAULTS.items()}
        v.update(values)
        key = None
        try:
            key = "topology.*"
            dist = {name: float(v[f"topology.distance.{name}"])
                    for name in ("sensor_ecu", "sensor_cross", "sensor_hpcu", "ecu_ecu", "ecu_hpcu")}
            for k in ("topology.wired_rate_gbps", "topology.ecu_ghz", "topology.hpcu_ghz",
                      "topology.capacity_window_ms"):
                key = k
                if float(v[k]) <= 0:
                    raise ValueError("must be positive")
            key = "topology.in_zone_reliability"
            in_zone = _range(v[key])
            key = "topology.cross_reliability"
            cross = _range(v[key])
            for lo, hi in (in_zone, cross):
                if not 0 < lo <= hi <= 1:
                    raise ValueError("reliability must lie in (0, 1]")
            tparams = TopologyParams(
                wired_rate=float(v["topology.wired_rate_gbps"]) * 1e9,
                ecu_speed=float(v["topology.ecu_ghz"]) * 1e9,
                hpcu_speed=float(v["topology.hpcu_ghz"]) * 1e9,
                capacity_window=float(v["topology.capacity_window_ms"]) * 1e-3,
                in_zone_reliability=in_zone, cross_reliability=cross, distances=dist,
            )
            key = "topology.sensors_per_zone"
            spz = _int_list(v[key])
            if len(spz) != 4 or min(spz) < 0:
                raise ValueError("need four nonnegative counts")

            key = "workload.*"
            stagger = float(v["workload.stagger_ms"]) * 1e-3
            workload = WorkloadConfig(
                origin_mix=_floats(v["workload.origin_mix"], 3),
                demand_range=tuple(x * 1e6 for x in _range(v["workload.demand_mcycles"])),
                size_range=tuple(x * 1e6 for x in _range(v["workload.size_mbits"])),
                result_fraction=float(v["workload.result_fraction"]),
                deadline_range=tuple(x * 1e-3 for x in _range(v["workload.deadline_ms"])),
                stagger=stagger > 0, stagger_window=stagger if stagger > 0 else 0.1,
            )
            key = "channel.*"
            channel = ChannelConfig(
                ber=float(v["channel.ber"]),
                mean_sinr_db=float(v["channel.mean_sinr_db"]),
                zone_bandwidth=float(v["channel.zone_bandwidth_mhz"]) * 1e6,
                hpcu_bandwidth=float(v["channel.hpcu_bandwidth_mhz"]) * 1e6,
                resource_bandwidth=float(v["channel.resource_khz"]) * 1e3,
                slot_duration=float(v["channel.slot_ms"]) * 1e-3,
                slot_cap=int(v["channel.slot_cap"]),
                fading=v["channel.fading"],
            )
            if channel.slot_duration <= 0 or channel.slot_cap < 1:
                raise ValueError("slot duration and cap must be positive")
            key = "ga.*"
            ga = GaParams(
                population=int(v["ga.population"]),
                elite_fraction=float(v["ga.elite_fraction"]),
                crossover_fraction=float(v["ga.crossover_fraction"]),
                generations=int(v["ga.generations"]),
                mutation_rate=float(v["ga.mutation_rate"]),
            )
            key = "ga.seed_home"
            seed_home = _bool(v[key])
            queues = {}
            for s in SchedulerKind:
                key = f"queue.{s.value}"
                queues[s] = v[key].strip().lower()
            key = "experiment.topologies"
            topologies = _names(v[key], TopologyKind)
            key = "experiment.media"
            media = _names(v[key], MediumMode)
            key = "experiment.schemes"
            schemes = _names(v[key], SchedulerKind)
            key = "experiment.load_points"
            loads = _int_list(v[key])
            key = "experiment.replications"
            reps = int(v[key])
            key = "experiment.base_seed"
            base = int(v[key])
            if base < 0:
                raise ValueError("seed must be nonnegative")
            key = "experiment.max_hops"
            hops = int(v[key])
            key = "output.per_task"
            per_task = _bool(v[key])
            key = "output.wall_time"
            wall = _bool(v[key])
            return cls(
                topologies=topologies, media=media, schemes=schemes, load_points=loads,
                replications=reps, base_seed=base, max_hops=hops, sensors_per_zone=spz,
                topology_params=tparams, workload=workload, channel=channel, ga=ga,
                seed_home=seed_home, queues=queues, out_dir=v["output.dir"],
                per_task=per_task, wall_time=wall,
            )
        except ConfigError:
            raise
        except (ValueError, TypeError) as e:
            raise ConfigError(f"{key}: {e}") from None

    @classmethod
    def from_text(cls, text: str, source: str = "<config>") -> "ExperimentConfig":
        return cls.from_mapping(parse_config_text(text, source))

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        path = FsPath(path)
        try:
            text = path.read_text()
        except OSError as e:
            raise ConfigError(f"cannot read {path}: {e.strerror}") from None
        return cls.from_text(text, str(path))


def default_config_text() -> str:
    lines = []
    for key, (default, doc) in DEFAULTS.items():
        lines.append(f"# {doc}")
        lines.append(f"{key} = {default}")
    return "\n".join(lines) + "\n"


# metrics

def satisfaction_ratio(evaluated: EvaluatedSchedule) -> float:
    if not evaluated.timings:
        raise ValueError("empty evaluation")
    return float(np.mean(evaluated.satisfied))


def usage_ratio(evaluated: EvaluatedSchedule, unit: NodeId, compute_spec: ComputeSpec) -> float:
    """Assigned cycles over the unit's capacity in the window (not clipped)."""
    return float(evaluated.used_cycles.get(unit, 0.0) / compute_spec.max_capacity)


def latency_stats(evaluated: EvaluatedSchedule) -> tuple[float, float, float, float]:
    """(mean, p50, p95, max) of the total times, nearest-rank percentiles."""
    t = np.sort(evaluated.totals)
    if t.size == 0:
        raise ValueError("empty evaluation")
    return float(np.mean(t)), _nearest_rank(t, 50), _nearest_rank(t, 95), float(t[-1])


def _nearest_rank(sorted_values: np.ndarray, pct: float) -> float:
    k = max(1, math.ceil(pct / 100.0 * sorted_values.size))
    return float(sorted_values[k - 1])


@dataclass
class RunReport:
    scheme: SchedulerKind
    topology: TopologyKind
    medium: MediumMode
    n_tasks: int
    seed: int
    satisfaction_ratio: float
    usage_ecu: tuple[float, ...]
    usage_hpcu: float
    latency: tuple[float, float, float, float]  # seconds
    objective: float
    feasible: bool
    wall_time: float  # seconds
    trace: list = field(default_factory=list)
    evaluated: EvaluatedSchedule | None = field(default=None, repr=False)

    @property
    def usage_ecu_mean(self) -> float:
        return float(np.mean(self.usage_ecu))


def derive_seed(*keys: int) -> int:
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1, np.uint64)[0])


def run_scheme(scheme, tasks, topology, model, config: ExperimentConfig, seed: int,
               problem: Problem | None = None) -> RunReport:
    """Schedule and evaluate one cell."""
    scheme = SchedulerKind(scheme)
    t0 = time.perf_counter()
    qmodel = model.with_queue(config.queues[scheme])
    trace = []
    if scheme is SchedulerKind.BASELINE:
        schedule = baseline_schedule(tasks, topology)
        feasible = True  # the capacity limit does not bind a fixed mapping
    else:
        problem = problem or Problem(tasks, topology, model=qmodel, max_hops=config.max_hops)
        problem.model = qmodel
        initial = [np.zeros(2 * len(tasks), np.int64)] if config.seed_home else ()
        ga = replace(config.ga, seed=derive_seed(seed, 3, len(tasks)))
        res = solve(tasks, topology, scheme, ga, problem=problem, initial=initial)
        schedule, feasible, trace = res.schedule, res.feasible, res.trace
    ev = evaluate_schedule(schedule, tasks, topology, model=qmodel, strict=False)
    wall = time.perf_counter() - t0
    specs = topology.compute_specs
    ecus = sorted(topology.ecus, key=lambda u: u.zone)
    return RunReport(
        scheme=scheme, topology=topology.kind, medium=topology.medium, n_tasks=len(tasks), seed=seed,
        satisfaction_ratio=satisfaction_ratio(ev),
        usage_ecu=tuple(usage_ratio(ev, u, specs[u]) for u in ecus),
        usage_hpcu=usage_ratio(ev, topology.hpcu, specs[topology.hpcu]),
        latency=latency_stats(ev), objective=objective(scheme, schedule, ev, tasks),
        feasible=feasible, wall_time=wall if config.wall_time else 0.0, trace=trace, evaluated=ev,
    )


def iter_cells(config: ExperimentConfig, progress=None) -> Iterable[RunReport]:
    """Yield a report per (topology, medium, replication, N, scheme) cell.

    Within a replication the topology, channel realization and task stream
    are shared by all load points and schemes.
    """
    n_max = max(config.load_points)
    for kind in config.topologies:
        for medium in config.media:
            for r in range(config.replications):
                seed = config.base_seed + r
                top = build_topology(kind, config.sensors_per_zone, medium,
                                     replace(config.topology_params, seed=derive_seed(seed, 1)))
                model = NetworkModel(top, config.channel, channel_seed=derive_seed(seed, 2))
                stream = generate_tasks(replace(config.workload, n_tasks=n_max), top, seed=seed)
                for n in config.load_points:
                    tasks = stream[:n]
                    problem = None
                    for scheme in config.schemes:
                        if scheme is not SchedulerKind.BASELINE and problem is None:
                            problem = Problem(tasks, top, model=model, max_hops=config.max_hops)
                        rep = run_scheme(scheme, tasks, top, model, config, seed, problem)
                        if progress:
                            progress(rep)
                        yield rep


def run_experiment(config: ExperimentConfig, out_dir=None, progress=None) -> list[RunReport]:
    """Run every cell, write the CSV reports, return the reports."""
    out = FsPath(out_dir if out_dir is not None else config.out_dir)
    _prepare_dir(out)
    reports = list(iter_cells(config, progress))
    write_reports(reports, out, per_task=config.per_task)
    return reports


class OutputDirError(OSError):
    pass


def _prepare_dir(out: FsPath):
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as e:
        raise OutputDirError(f"cannot write to {out}: {e.strerror or e}") from None


SUMMARY_COLUMNS = [
    "scheme", "topology", "medium", "n_tasks", "seed", "satisfaction_ratio",
    "usage_ecu1", "usage_ecu2", "usage_ecu3", "usage_ecu4", "usage_hpcu",
    "latency_mean_ms", "latency_p50_ms", "latency_p95_ms", "latency_max_ms",
    "objective", "feasible", "wall_time_ms",
]
AGGREGATE_COLUMNS = [
    "scheme", "topology", "medium", "n_tasks", "replications", "satisfaction_ratio",
    "usage_ecu_mean", "usage_ecu1", "usage_ecu2", "usage_ecu3", "usage_ecu4", "usage_hpcu",
    "latency_mean_ms", "latency_p50_ms", "latency_p95_ms", "latency_max_ms",
    "objective", "feasible_fraction",
]
PER_TASK_COLUMNS = [
    "scheme", "topology", "medium", "n_tasks", "seed", "task_id", "unit", "path",
    "t_comm_ms", "t_proc_ms", "t_return_ms", "total_ms", "deadline_ms", "queue_wait_ms",
    "satisfied", "reliability",
]
CONVERGENCE_COLUMNS = ["scheme", "topology", "medium", "n_tasks", "seed", "generation", "best_fitness"]


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, float):
        return repr(float(x)) if math.isfinite(x) else ("inf" if x > 0 else "nan" if x != x else "-inf")
    return str(x.value if hasattr(x, "value") else x)


def _key(r: RunReport):
    return r.scheme.value, r.topology.value, r.medium.value, r.n_tasks, r.seed


def summary_row(r: RunReport) -> list:
    ms = [x * 1e3 for x in r.latency]
    return [*_key(r), r.satisfaction_ratio, *r.usage_ecu, r.usage_hpcu, *ms,
            r.objective, r.feasible, r.wall_time * 1e3]


def aggregate(reports: Sequence[RunReport]) -> list[list]:
    """Mean over replications for each (scheme, topology, medium, N)."""
    groups: dict[tuple, list[RunReport]] = {}
    for r in reports:
        groups.setdefault(_key(r)[:4], []).append(r)
    rows = []
    for k in sorted(groups):
        g = groups[k]
        ecu = np.array([r.usage_ecu for r in g])
        lat = np.array([r.latency for r in g]) * 1e3
        rows.append([
            *k, len(g),
            float(np.mean([r.satisfaction_ratio for r in g])),
            float(ecu.mean()), *(float(x) for x in ecu.mean(axis=0)),
            float(np.mean([r.usage_hpcu for r in g])),
            *(float(x) for x in lat.mean(axis=0)),
            float(np.mean([r.objective for r in g])),
            float(np.mean([r.feasible for r in g])),
        ])
    return rows


def write_reports(reports: Sequence[RunReport], out: FsPath, per_task: bool = True):
    out = FsPath(out)
    ordered = sorted(reports, key=_key)
    _write(out / "summary.csv", SUMMARY_COLUMNS, (summary_row(r) for r in ordered))
    _write(out / "aggregate.csv", AGGREGATE_COLUMNS, aggregate(ordered))
    conv = []
    for r in ordered:
        conv += [[*_key(r), g, f] for g, f in enumerate(r.trace)]
    _write(out / "convergence.csv", CONVERGENCE_COLUMNS, conv)
    if per_task:
        rows = []
        for r in ordered:
            if r.evaluated is None:
                continue
            for t in r.evaluated.timings:
                rows.append([*_key(r), t.task_id, str(t.unit), t.path,
                             t.t_comm * 1e3, t.t_proc * 1e3, t.t_return * 1e3, t.total * 1e3,
                             t.deadline * 1e3, t.queue_wait * 1e3, t.satisfied, t.reliability])
        _write(out / "per_task.csv", PER_TASK_COLUMNS, rows)


def _write(path: FsPath, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
