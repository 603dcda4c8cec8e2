"""Deadline-aware task scheduling for zonal in-vehicle networks."""
from .channel import BandId, BandPlan, ChannelConfig, FadingProcess, SlotCapExceeded
from .scheduling import (
    SCHEME_QUEUES, Assignment, EvaluatedSchedule, NetworkModel, Schedule, SchedulerKind,
    baseline_schedule, check_constraints, evaluate_schedule,
)
from .topology import MediumMode, NodeId, Path, Topology, TopologyKind, TopologyParams, build_topology, enumerate_paths
from .workload import Task, WorkloadConfig, generate_tasks

__version__ = "0.1.0"
