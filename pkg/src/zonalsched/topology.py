"""Zonal in-vehicle network topologies.

Four zones (front-left, front-right, rear-left, rear-right), each with a zone
ECU and its sensors/actuators, plus one central HPCU.  Links are either wired
(Ethernet-like, reliability 1) or wireless (OFDMA band, reliability < 1).
"""
from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import networkx as nx
import numpy as np

from .channel import BandId

N_ZONES = 4
ZONE_NAMES = {1: "front-left", 2: "front-right", 3: "rear-left", 4: "rear-right"}
# left <-> right within the same front/rear half
OPPOSITE_ZONE = {1: 2, 2: 1, 3: 4, 4: 3}
# adjacent zECU pairs of the basic-mesh ring; diagonals go through the HPCU
RING_PAIRS = ((1, 2), (3, 4), (1, 3), (2, 4))

_KIND_RANK = {"sensor": 0, "ecu": 1, "hpcu": 2}


class TopologyKind(str, enum.Enum):
    TREE = "tree"
    BASIC_MESH = "basic_mesh"
    CROSS_ZONE_MESH = "cross_zone_mesh"
    CENTRALIZED_MESH = "centralized_mesh"


class MediumMode(str, enum.Enum):
    WIRED = "wired"
    HYBRID = "hybrid"


class LinkClass(str, enum.Enum):
    """Reliability class of a link, used when sampling its reliability."""

    IN_ZONE_SENSOR = "in_zone_sensor"
    CROSS_ZONE_OR_HPCU = "cross_zone_or_hpcu"
    WIRED = "wired"


@functools.total_ordering
@dataclass(frozen=True)
class NodeId:
    kind: str
    zone: int = 0
    index: int = 0

    def __post_init__(self):
        if self.kind not in _KIND_RANK:
            raise ValueError(f"unknown node kind {self.kind!r}")
        if self.kind != "hpcu" and not 1 <= self.zone <= N_ZONES:
            raise ValueError(f"zone {self.zone} outside 1..{N_ZONES}")
        if self.kind == "sensor" and self.index < 1:
            raise ValueError("sensor index starts at 1")

    @classmethod
    def sensor(cls, zone: int, index: int) -> "NodeId":
        return cls("sensor", zone, index)

    @classmethod
    def ecu(cls, zone: int) -> "NodeId":
        return cls("ecu", zone)

    @classmethod
    def hpcu(cls) -> "NodeId":
        return cls("hpcu")

    @property
    def is_unit(self) -> bool:
        return self.kind != "sensor"

    @property
    def sort_key(self) -> tuple[int, int, int]:
        return (_KIND_RANK[self.kind], self.zone, self.index)

    def __lt__(self, other: "NodeId") -> bool:
        return self.sort_key < other.sort_key

    def __str__(self) -> str:
        if self.kind == "sensor":
            return f"S{self.zone}.{self.index}"
        if self.kind == "ecu":
            return f"Z{self.zone}"
        return "H"

    @classmethod
    def parse(cls, text: str) -> "NodeId":
        text = text.strip()
        if text == "H":
            return cls.hpcu()
        if text.startswith("Z"):
            return cls.ecu(int(text[1:]))
        if text.startswith("S"):
            zone, index = text[1:].split(".")
            return cls.sensor(int(zone), int(index))
        raise ValueError(f"cannot parse node id {text!r}")


@dataclass(frozen=True)
class ComputeSpec:
    unit: NodeId
    speed: float  # cycles per second
    capacity_window: float  # seconds

    def __post_init__(self):
        if not self.unit.is_unit:
            raise ValueError(f"{self.unit} cannot process tasks")
        if self.speed <= 0 or self.capacity_window <= 0:
            raise ValueError("speed and capacity window must be positive")

    @property
    def max_capacity(self) -> float:
        return self.speed * self.capacity_window


@dataclass(frozen=True)
class Link:
    a: NodeId
    b: NodeId
    medium: str  # "wired" | "wireless"
    link_class: LinkClass
    rate: float = 0.0  # bit/s, wired only
    band: BandId | None = None  # wireless only
    reliability: float = 1.0
    distance: float = 1.0

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError("self-loop link")
        if self.distance <= 0:
            raise ValueError("link distance must be positive")
        if self.medium == "wired":
            if self.rate <= 0:
                raise ValueError("wired link needs a positive rate")
            if self.reliability != 1.0:
                raise ValueError("wired links have reliability 1")
        elif self.medium == "wireless":
            if self.band is None:
                raise ValueError("wireless link needs a band")
            if not 0.0 < self.reliability <= 1.0:
                raise ValueError("wireless reliability must lie in (0, 1]")
        else:
            raise ValueError(f"unknown medium {self.medium!r}")

    @property
    def wireless(self) -> bool:
        return self.medium == "wireless"

    @property
    def endpoints(self) -> frozenset[NodeId]:
        return frozenset((self.a, self.b))

    def other(self, node: NodeId) -> NodeId:
        if node == self.a:
            return self.b
        if node == self.b:
            return self.a
        raise ValueError(f"{node} is not an endpoint of {self}")

    def __str__(self) -> str:
        return f"{self.a}-{self.b}"


@dataclass(frozen=True)
class Path:
    src: NodeId
    dst: NodeId
    links: tuple[Link, ...] = ()

    def __post_init__(self):
        nodes = [self.src]
        for link in self.links:
            nodes.append(link.other(nodes[-1]))
        if nodes[-1] != self.dst:
            raise ValueError(f"path does not end at {self.dst}")
        if len(set(nodes)) != len(nodes):
            raise ValueError("path repeats a node")

    @property
    def nodes(self) -> tuple[NodeId, ...]:
        nodes = [self.src]
        for link in self.links:
            nodes.append(link.other(nodes[-1]))
        return tuple(nodes)

    @property
    def hops(self) -> int:
        return len(self.links)

    def reversed(self) -> "Path":
        return Path(self.dst, self.src, tuple(reversed(self.links)))

    def __str__(self) -> str:
        return ">".join(str(n) for n in self.nodes)


@dataclass(frozen=True)
class TopologyParams:
    """Physical parameters used when building a topology."""

    wired_rate: float = 1e9
    ecu_speed: float = 1e9
    hpcu_speed: float = 4e9
    capacity_window: float = 0.1
    in_zone_reliability: tuple[float, float] = (0.95, 1.0)
    cross_reliability: tuple[float, float] = (0.90, 1.0)
    # per link class distance weight d_ij
    distances: dict = field(default_factory=lambda: {
        "sensor_ecu": 1.0, "sensor_cross": 1.0, "sensor_hpcu": 1.0,
        "ecu_ecu": 1.0, "ecu_hpcu": 1.0,
    })
    seed: int = 0
    reliability_sampler: Callable | None = None


@dataclass(frozen=True, eq=False)
class Topology:
    kind: TopologyKind
    medium: MediumMode
    nodes: tuple[NodeId, ...]
    links: tuple[Link, ...]
    compute_specs: dict

    def __post_init__(self):
        graph = nx.Graph()
        graph.add_nodes_from(self.nodes)
        for i, link in enumerate(self.links):
            if graph.has_edge(link.a, link.b):
                raise ValueError(f"duplicate link {link}")
            graph.add_edge(link.a, link.b, link=link, index=i)
        object.__setattr__(self, "graph", graph)
        object.__setattr__(self, "_link_index", {l: i for i, l in enumerate(self.links)})
        object.__setattr__(self, "_path_cache", {})

    @property
    def units(self) -> tuple[NodeId, ...]:
        return tuple(sorted(self.compute_specs))

    @property
    def sensors(self) -> tuple[NodeId, ...]:
        return tuple(n for n in self.nodes if n.kind == "sensor")

    @property
    def ecus(self) -> tuple[NodeId, ...]:
        return tuple(n for n in self.nodes if n.kind == "ecu")

    @property
    def hpcu(self) -> NodeId:
        return NodeId.hpcu()

    def link_between(self, a: NodeId, b: NodeId) -> Link | None:
        data = self.graph.get_edge_data(a, b)
        return None if data is None else data["link"]

    def link_index(self, link: Link) -> int:
        return self._link_index[link]

    def neighbors(self, node: NodeId) -> list[NodeId]:
        return sorted(self.graph.neighbors(node))

    @property
    def wireless_links(self) -> tuple[Link, ...]:
        return tuple(l for l in self.links if l.wireless)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "medium": self.medium.value,
            "nodes": [str(n) for n in self.nodes],
            "links": [
                {
                    "a": str(l.a), "b": str(l.b), "medium": l.medium,
                    "class": l.link_class.value, "rate": l.rate,
                    "band": None if l.band is None else str(l.band),
                    "reliability": l.reliability, "distance": l.distance,
                }
                for l in self.links
            ],
            "compute": {
                str(u): {"speed": s.speed, "window": s.capacity_window}
                for u, s in sorted(self.compute_specs.items())
            },
        }


def build_topology(
    kind: TopologyKind | str,
    zone_sensor_counts: Sequence[int] = (9, 9, 9, 9),
    medium_mode: MediumMode | str = MediumMode.WIRED,
    params: TopologyParams | None = None,
) -> Topology:
    """Build one of the four zonal topologies.

    In hybrid mode exactly the links touching a sensor/actuator are wireless;
    each wireless link to a zone ECU uses that ECU's zone band and links to the
    HPCU use the HPCU band.  Reliabilities are drawn once per link, in link
    order, from ``params.seed``.
    """
    kind = TopologyKind(kind)
    medium = MediumMode(medium_mode)
    params = params or TopologyParams()
    counts = list(zone_sensor_counts)
    if len(counts) != N_ZONES:
        raise ValueError(f"need {N_ZONES} zone sensor counts, got {len(counts)}")
    if any(c < 1 for c in counts):
        raise ValueError("every zone needs at least one sensor")

    sampler = params.reliability_sampler
    if sampler is None:
        from .workload import sample_link_reliability

        sampler = functools.partial(
            sample_link_reliability,
            in_zone_range=params.in_zone_reliability,
            cross_range=params.cross_reliability,
        )
    rng = np.random.default_rng(params.seed)
    dist = params.distances
    hybrid = medium is MediumMode.HYBRID

    ecus = [NodeId.ecu(m) for m in range(1, N_ZONES + 1)]
    hpcu = NodeId.hpcu()
    sensors = [NodeId.sensor(m, s) for m in range(1, N_ZONES + 1) for s in range(1, counts[m - 1] + 1)]

    links: list[Link] = []

    def wired(a, b, d):
        links.append(Link(a, b, "wired", LinkClass.WIRED, rate=params.wired_rate, distance=d))

    def sensor_link(sensor, unit, link_class, d):
        if not hybrid:
            wired(sensor, unit, d)
            return
        band = BandId.hpcu() if unit.kind == "hpcu" else BandId.zone_band(unit.zone)
        rho = float(sampler(link_class, rng))
        links.append(Link(sensor, unit, "wireless", link_class, band=band, reliability=rho, distance=d))

    for s in sensors:
        sensor_link(s, NodeId.ecu(s.zone), LinkClass.IN_ZONE_SENSOR, dist["sensor_ecu"])
    for e in ecus:
        wired(e, hpcu, dist["ecu_hpcu"])
    if kind is not TopologyKind.TREE:
        for za, zb in RING_PAIRS:
            wired(NodeId.ecu(za), NodeId.ecu(zb), dist["ecu_ecu"])
    if kind in (TopologyKind.CROSS_ZONE_MESH, TopologyKind.CENTRALIZED_MESH):
        for s in sensors:
            sensor_link(s, NodeId.ecu(OPPOSITE_ZONE[s.zone]), LinkClass.CROSS_ZONE_OR_HPCU, dist["sensor_cross"])
    if kind is TopologyKind.CENTRALIZED_MESH:
        for s in sensors:
            sensor_link(s, hpcu, LinkClass.CROSS_ZONE_OR_HPCU, dist["sensor_hpcu"])

    specs = {e: ComputeSpec(e, params.ecu_speed, params.capacity_window) for e in ecus}
    specs[hpcu] = ComputeSpec(hpcu, params.hpcu_speed, params.capacity_window)
    nodes = tuple(sensors + ecus + [hpcu])
    return Topology(kind, medium, nodes, tuple(links), specs)


def enumerate_paths(topology: Topology, src: NodeId, dst: NodeId, max_hops: int = 4) -> list[Path]:
    """All simple paths of at most ``max_hops`` links, shortest first.

    Sensors/actuators are endpoints only: intermediate nodes are computing
    units.  Ties are ordered lexicographically by node sequence so chromosome
    decoding is reproducible.
    """
    if max_hops < 1:
        raise ValueError("max_hops must be at least 1")
    for node in (src, dst):
        if node not in topology.graph:
            raise KeyError(f"{node} not in topology")
    key = (src, dst, max_hops)
    cached = topology._path_cache.get(key)
    if cached is not None:
        return list(cached)
    if src == dst:
        paths = [Path(src, dst)]
    else:
        relays = [n for n in topology.graph if n.is_unit or n in (src, dst)]
        node_paths = nx.all_simple_paths(topology.graph.subgraph(relays), src, dst, cutoff=max_hops)
        node_paths = sorted(node_paths, key=lambda p: (len(p), [n.sort_key for n in p]))
        paths = [
            Path(src, dst, tuple(topology.link_between(u, v) for u, v in zip(p, p[1:])))
            for p in node_paths
        ]
    topology._path_cache[key] = tuple(paths)
    return paths


def path_distance(path: Path) -> float:
    return float(sum(l.distance for l in path.links))


def path_reliability(path: Path | Iterable[Link]) -> float:
    links = path.links if isinstance(path, Path) else path
    rel = 1.0
    for link in links:
        rel *= link.reliability
    return rel
