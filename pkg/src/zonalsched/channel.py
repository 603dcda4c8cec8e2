"""Wired and OFDMA wireless transmission times.

Wireless bands are split into orthogonal resources; the per-resource rate
follows a Shannon-style bound derated by the bit error rate, with SINR drawn
from Rayleigh (exponential power) fading.  Fading and per-slot delivery draws
are counter-based: a value depends only on (seed, link, resource, slot).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_BLOCK = 256  # slots per counter-based fading block


class SlotCapExceeded(RuntimeError):
    """A wireless transmission did not complete within the configured slot cap."""


@dataclass(frozen=True, order=True)
class BandId:
    kind: str  # "zone" | "hpcu"
    zone: int = 0

    @classmethod
    def zone_band(cls, zone: int) -> "BandId":
        return cls("zone", zone)

    @classmethod
    def hpcu(cls) -> "BandId":
        return cls("hpcu", 0)

    def __str__(self) -> str:
        return "BH" if self.kind == "hpcu" else f"B{self.zone}"


@dataclass(frozen=True)
class BandPlan:
    band: BandId
    bandwidth: float = 20e6
    resource_bandwidth: float = 360e3  # 12 subcarriers x 30 kHz
    slot_duration: float = 0.5e-3

    def __post_init__(self):
        if self.resource_count < 1:
            raise ValueError("band narrower than one resource")
        if self.slot_duration <= 0:
            raise ValueError("slot duration must be positive")

    @property
    def resource_count(self) -> int:
        return int(math.floor(self.bandwidth / self.resource_bandwidth + 1e-9))


@dataclass(frozen=True)
class ChannelConfig:
    ber: float = 1e-5
    mean_sinr_db: float = 30.0
    zone_bandwidth: float = 20e6
    hpcu_bandwidth: float = 20e6
    resource_bandwidth: float = 360e3
    slot_duration: float = 0.5e-3
    slot_cap: int = 2000
    fading: str = "rayleigh"  # "rayleigh" | "frozen"

    def __post_init__(self):
        if not 0.0 <= self.ber < 1.0:
            raise ValueError("BER must lie in [0, 1)")
        if self.fading not in ("rayleigh", "frozen"):
            raise ValueError(f"unknown fading model {self.fading!r}")

    @property
    def mean_sinr(self) -> float:
        return 10.0 ** (self.mean_sinr_db / 10.0)

    def band_plan(self, band: BandId) -> BandPlan:
        bw = self.hpcu_bandwidth if band.kind == "hpcu" else self.zone_bandwidth
        return BandPlan(band, bw, self.resource_bandwidth, self.slot_duration)


@dataclass
class FadingProcess:
    """Per-(link, resource, slot) SINR samples, reproducible from ``seed``.

    ``frozen=True`` replaces fading by its mean (every sample equals the mean
    SINR); delivery draws stay random.
    """

    mean_sinr: float
    seed: int = 0
    n_resources: int = 55
    frozen: bool = False
    _cache: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_config(cls, config: ChannelConfig, seed: int) -> "FadingProcess":
        k = config.band_plan(BandId.zone_band(1)).resource_count
        return cls(config.mean_sinr, seed, k, frozen=config.fading == "frozen")

    def _fading_block(self, link: int, block: int) -> np.ndarray:
        key = ("f", link, block)
        arr = self._cache.get(key)
        if arr is None:
            rng = np.random.default_rng([self.seed, 0, link, block])
            arr = rng.standard_exponential((_BLOCK, self.n_resources))
            self._cache[key] = arr
        return arr

    def _delivery_block(self, link: int, block: int) -> np.ndarray:
        key = ("d", link, block)
        arr = self._cache.get(key)
        if arr is None:
            arr = np.random.default_rng([self.seed, 1, link, block]).random(_BLOCK)
            self._cache[key] = arr
        return arr

    def sinr_block(self, link: int, start_slot: int, stop_slot: int) -> np.ndarray:
        """SINR samples of shape (stop_slot - start_slot, n_resources)."""
        n = stop_slot - start_slot
        if self.frozen or self.mean_sinr == 0.0:
            return np.full((n, self.n_resources), float(self.mean_sinr))
        first, last = start_slot // _BLOCK, (stop_slot - 1) // _BLOCK
        blocks = np.concatenate([self._fading_block(link, b) for b in range(first, last + 1)])
        off = start_slot - first * _BLOCK
        return self.mean_sinr * blocks[off:off + n]

    def delivery_uniforms(self, link: int, start_slot: int, stop_slot: int) -> np.ndarray:
        n = stop_slot - start_slot
        first, last = start_slot // _BLOCK, (stop_slot - 1) // _BLOCK
        blocks = np.concatenate([self._delivery_block(link, b) for b in range(first, last + 1)])
        off = start_slot - first * _BLOCK
        return blocks[off:off + n]


@dataclass(frozen=True)
class TransmissionOutcome:
    duration: float
    slots_used: int
    retransmission_slots: int
    start_slot: int = 0


def wired_tx_time(size: float, rate: float) -> float:
    if rate <= 0:
        raise ValueError("wired rate must be positive")
    return size / rate


def instantaneous_rate(resource_bandwidth, sinr, ber):
    """Achievable rate of one resource; vectorizes over numpy inputs."""
    return resource_bandwidth * np.log2(1.0 + np.asarray(sinr, dtype=float)) * (1.0 - ber) + 0.0


def sample_sinr(fading: FadingProcess, link: int, resource: int, slot: int) -> float:
    if not 0 <= resource < fading.n_resources:
        raise IndexError(f"resource {resource} out of range")
    return float(fading.sinr_block(link, slot, slot + 1)[0, resource])


def link_rate(band_plan: BandPlan, allocated_resources, sinr_samples, ber: float) -> float:
    """Sum of per-resource rates over the allocated resources.

    ``sinr_samples`` is indexed by resource index.
    """
    res = sorted(set(allocated_resources))
    if not res:
        return 0.0
    if res[0] < 0 or res[-1] >= band_plan.resource_count:
        raise IndexError(f"resource index outside 0..{band_plan.resource_count - 1}")
    sinr = np.asarray(sinr_samples, dtype=float)[res]
    return float(np.sum(instantaneous_rate(band_plan.resource_bandwidth, sinr, ber)))


def wireless_tx_time(
    size: float,
    link: int,
    allocated_resources,
    fading: FadingProcess,
    start_slot: int,
    reliability: float,
    rng: np.random.Generator | None = None,
    *,
    band_plan: BandPlan,
    ber: float = 1e-5,
    slot_cap: int = 2000,
) -> TransmissionOutcome:
    """Step slot by slot until the delivered bits cover ``size``.

    Each slot's bits are delivered with probability ``reliability``; a failed
    slot is wasted and counted as a retransmission slot.  Delivery draws come
    from ``rng`` when given, otherwise from the fading process's counter-based
    delivery stream for ``link``.
    """
    allocated = sorted(set(allocated_resources))
    if not allocated:
        raise ValueError("no resources allocated")
    if size <= 0:
        raise ValueError("size must be positive")
    delivered = 0.0
    failed = 0
    slot = start_slot
    while delivered < size:
        if slot - start_slot >= slot_cap:
            raise SlotCapExceeded(f"{size:.0f} bits not delivered within {slot_cap} slots")
        sinr = fading.sinr_block(link, slot, slot + 1)[0]
        bits = link_rate(band_plan, allocated, sinr, ber) * band_plan.slot_duration
        u = rng.random() if rng is not None else fading.delivery_uniforms(link, slot, slot + 1)[0]
        if u < reliability:
            delivered += bits
        else:
            failed += 1
        slot += 1
    used = slot - start_slot
    return TransmissionOutcome(used * band_plan.slot_duration, used, failed, start_slot)


@dataclass
class ChannelTable:
    """Cumulative delivered bits per wireless link and slot, full-band allocation.

    ``cum_bits[i, t]`` is the number of bits a full-band transmission on the
    i-th wireless link delivers over slots ``0..t-1``.
    """

    link_indices: np.ndarray  # topology link index per row
    cum_bits: np.ndarray
    cum_failed: np.ndarray
    slot_duration: float


def build_channel_table(links, link_indices, config: ChannelConfig, fading: FadingProcess) -> ChannelTable:
    n_slots = config.slot_cap
    cum = np.zeros((len(links), n_slots + 1))
    cum_failed = np.zeros((len(links), n_slots + 1), dtype=np.int64)
    for row, (link, idx) in enumerate(zip(links, link_indices)):
        plan = config.band_plan(link.band)
        sinr = fading.sinr_block(idx, 0, n_slots)[:, : plan.resource_count]
        bits = instantaneous_rate(plan.resource_bandwidth, sinr, config.ber).sum(axis=1) * plan.slot_duration
        ok = fading.delivery_uniforms(idx, 0, n_slots) < link.reliability
        cum[row, 1:] = np.cumsum(np.where(ok, bits, 0.0))
        cum_failed[row, 1:] = np.cumsum(~ok)
    return ChannelTable(np.asarray(link_indices, dtype=np.int64), cum, cum_failed, config.slot_duration)
