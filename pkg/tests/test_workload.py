import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zonalsched import WorkloadConfig, build_topology, generate_tasks
from zonalsched.topology import LinkClass
from zonalsched.workload import sample_link_reliability

TOP = build_topology("tree")


def test_ranges_and_result_size():
    tasks = generate_tasks(WorkloadConfig(n_tasks=500), TOP, seed=3)
    assert len(tasks) == 500 and [t.id for t in tasks] == list(range(500))
    for t in tasks:
        assert 5e6 <= t.compute_demand <= 15e6
        assert 0.5e6 <= t.size <= 1.5e6
        assert t.result_size == pytest.approx(0.15 * t.size)
        assert 40e-3 <= t.deadline <= 100e-3
        assert t.gen_time == 0.0


def test_origin_mix_and_means():
    tasks = generate_tasks(WorkloadConfig(n_tasks=20_000), TOP, seed=1)
    kinds = np.array([t.origin.kind for t in tasks])
    assert abs(np.mean(kinds == "sensor") - 0.70) < 0.015
    assert abs(np.mean(kinds == "ecu") - 0.15) < 0.01
    assert abs(np.mean(kinds == "hpcu") - 0.15) < 0.01
    assert abs(np.mean([t.compute_demand for t in tasks]) / 10e6 - 1) < 0.01
    assert abs(np.mean([t.size for t in tasks]) / 1e6 - 1) < 0.01
    zones = [t.origin.zone for t in tasks if t.origin.kind == "sensor"]
    counts = np.bincount(zones, minlength=5)[1:]
    assert counts.min() / counts.max() > 0.9


def test_reproducible_and_stream_stable():
    cfg = WorkloadConfig(n_tasks=30)
    a = generate_tasks(cfg, TOP, seed=5)
    assert a == generate_tasks(cfg, TOP, seed=5)
    longer = generate_tasks(WorkloadConfig(n_tasks=60), TOP, seed=5)
    assert longer[:30] == a
    assert generate_tasks(cfg, TOP, seed=6) != a


def test_zero_tasks_and_pure_mixes():
    assert generate_tasks(WorkloadConfig(n_tasks=0), TOP) == []
    only_hpcu = generate_tasks(WorkloadConfig(n_tasks=20, origin_mix=(0, 0, 1)), TOP)
    assert {t.origin for t in only_hpcu} == {TOP.hpcu}


def test_stagger_spreads_generation_times():
    tasks = generate_tasks(WorkloadConfig(n_tasks=200, stagger=True, stagger_window=0.05), TOP, seed=2)
    gen = np.array([t.gen_time for t in tasks])
    assert gen.min() >= 0 and gen.max() < 0.05 and gen.std() > 0.01


@pytest.mark.parametrize("kwargs", [
    {"n_tasks": -1}, {"origin_mix": (0.5, 0.5, 0.5)}, {"origin_mix": (1.0, 0.0)},
    {"demand_range": (0, 5)}, {"deadline_range": (0.1, 0.04)}, {"result_fraction": 0},
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        WorkloadConfig(**kwargs)


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1))
def test_link_reliability_sampler(seed):
    rng = np.random.default_rng(seed)
    assert sample_link_reliability(LinkClass.WIRED, rng) == 1.0
    assert 0.95 <= sample_link_reliability(LinkClass.IN_ZONE_SENSOR, rng) <= 1.0
    assert 0.90 <= sample_link_reliability(LinkClass.CROSS_ZONE_OR_HPCU, rng) <= 1.0


def test_task_to_dict():
    t = generate_tasks(WorkloadConfig(n_tasks=1), TOP, seed=0)[0]
    d = t.to_dict()
    assert d["origin"] == str(t.origin) and d["size"] == t.size
