import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zonalsched.channel import (
    BandId, BandPlan, ChannelConfig, FadingProcess, SlotCapExceeded, instantaneous_rate,
    link_rate, sample_sinr, wired_tx_time, wireless_tx_time,
)

# oracle values computed independently (arbitrary precision) before the build
RB_RATE = 3588201.4531809577  # 360 kHz * log2(1001)
BAND_RATE = 197351079.92495267  # 55 resources
PLAN = BandPlan(BandId.zone_band(1))


def frozen(seed=0):
    return FadingProcess(1000.0, seed, 55, frozen=True)


def test_band_plan_resource_count():
    assert PLAN.resource_count == 55
    assert ChannelConfig().band_plan(BandId.hpcu()).resource_count == 55
    with pytest.raises(ValueError):
        BandPlan(BandId.hpcu(), bandwidth=100e3)


@pytest.mark.parametrize("size,rate,expected", [(1e6, 1e9, 1e-3), (0, 1e9, 0.0), (1.5e6, 1e9, 1.5e-3)])
def test_wired_tx_time(size, rate, expected):
    assert wired_tx_time(size, rate) == pytest.approx(expected, abs=1e-15)


def test_wired_rejects_nonpositive_rate():
    with pytest.raises(ValueError):
        wired_tx_time(1e6, 0)


def test_instantaneous_rate_examples():
    assert instantaneous_rate(360e3, 1000, 0) == pytest.approx(RB_RATE, rel=1e-12)
    assert instantaneous_rate(360e3, 0, 0.3) == 0
    assert instantaneous_rate(360e3, 1000, 1.0) == 0


@settings(max_examples=100)
@given(st.floats(1e3, 1e7), st.floats(1e-3, 1e5), st.floats(0, 0.5), st.floats(1.01, 3))
def test_instantaneous_rate_monotone(bw, sinr, ber, factor):
    r = instantaneous_rate(bw, sinr, ber)
    assert instantaneous_rate(bw, sinr * factor, ber) > r
    assert instantaneous_rate(bw * factor, sinr, ber) > r
    assert instantaneous_rate(bw, sinr, min(0.99, ber + 0.01 * factor)) < r


def test_link_rate_examples():
    samples = np.full(55, 1000.0)
    assert link_rate(PLAN, [], samples, 0) == 0
    assert link_rate(PLAN, [0], samples, 0) == pytest.approx(RB_RATE, rel=1e-12)
    assert link_rate(PLAN, range(55), samples, 0) == pytest.approx(BAND_RATE, rel=1e-12)
    with pytest.raises(IndexError):
        link_rate(PLAN, [55], samples, 0)


def test_frozen_full_band_one_megabit():
    out = wireless_tx_time(1e6, 0, range(55), frozen(), 0, 1.0, band_plan=PLAN)
    assert out.slots_used == 11 and out.duration == pytest.approx(5.5e-3)
    assert out.retransmission_slots == 0


def test_frozen_single_resource_one_megabit():
    out = wireless_tx_time(1e6, 0, [0], frozen(), 0, 1.0, band_plan=PLAN)
    assert out.slots_used == 558 and out.duration == pytest.approx(0.279)


def test_tiny_transfer_takes_one_slot():
    out = wireless_tx_time(1e-9, 0, [3], frozen(), 17, 1.0, band_plan=PLAN)
    assert out.slots_used == 1 and out.start_slot == 17


@settings(max_examples=50, deadline=None)
@given(st.floats(1e3, 3e6), st.integers(1, 55), st.integers(0, 1000))
def test_frozen_closed_form(size, k, start):
    out = wireless_tx_time(size, 2, range(k), frozen(), start, 1.0, band_plan=PLAN, ber=1e-5)
    per_slot = k * instantaneous_rate(360e3, 1000.0, 1e-5) * 0.5e-3
    assert out.slots_used == math.ceil(size / per_slot)
    assert out.duration == out.slots_used * 0.5e-3


def test_more_resources_never_slower():
    prev = None
    for k in range(1, 56, 6):
        d = wireless_tx_time(2e6, 0, range(k), frozen(), 0, 1.0, band_plan=PLAN, slot_cap=10_000).duration
        assert prev is None or d <= prev
        prev = d


def test_retry_overhead_monte_carlo():
    rho = 0.8
    rng = np.random.default_rng(11)
    wasted = delivered = 0
    for _ in range(10_000):
        out = wireless_tx_time(1e6, 0, range(55), frozen(), 0, rho, rng, band_plan=PLAN)
        wasted += out.retransmission_slots
        delivered += out.slots_used - out.retransmission_slots
        assert out.retransmission_slots <= out.slots_used
    expected = (1 - rho) / rho
    assert abs(wasted / delivered - expected) / expected < 0.05


def test_counter_based_delivery_is_reproducible():
    a = wireless_tx_time(1e6, 5, range(55), frozen(3), 40, 0.7, band_plan=PLAN)
    b = wireless_tx_time(1e6, 5, range(55), frozen(3), 40, 0.7, band_plan=PLAN)
    assert a == b


def test_slot_cap():
    with pytest.raises(SlotCapExceeded):
        wireless_tx_time(1e6, 0, [0], frozen(), 0, 1.0, band_plan=PLAN, slot_cap=100)
    with pytest.raises(ValueError):
        wireless_tx_time(1e6, 0, [], frozen(), 0, 1.0, band_plan=PLAN)


def test_sinr_mean_and_determinism():
    fp = FadingProcess(1000.0, seed=4, n_resources=55)
    block = fp.sinr_block(0, 0, 2000)  # 110k samples
    assert block.min() >= 0
    assert abs(block.mean() / 1000.0 - 1) < 0.02
    assert sample_sinr(fp, 0, 7, 300) == sample_sinr(FadingProcess(1000.0, 4, 55), 0, 7, 300)
    assert sample_sinr(fp, 0, 7, 300) == block[300, 7]
    assert sample_sinr(FadingProcess(0.0, 1), 0, 0, 0) == 0


def test_sinr_exponential_shape():
    x = FadingProcess(1.0, seed=9, n_resources=55).sinr_block(3, 0, 2000).ravel()
    # exponential(1): P(X > 1) = e^-1, variance 1
    assert abs(np.mean(x > 1) - math.exp(-1)) < 0.01
    assert abs(np.var(x) - 1) < 0.05


def test_config_validation():
    assert ChannelConfig().mean_sinr == pytest.approx(1000.0)
    with pytest.raises(ValueError):
        ChannelConfig(ber=1.0)
    with pytest.raises(ValueError):
        ChannelConfig(fading="rician")
