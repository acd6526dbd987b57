"""Network topology: SNDlib native-format parsing and delay-weighted shortest paths."""

from __future__ import annotations

import heapq
import json
import math
import re
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import TopologyParseError

EARTH_RADIUS_KM = 6371.0088
# fiber propagation, 2e5 km/s
FIBER_KM_PER_MS = 200.0


@dataclass(frozen=True)
class Node:
    id: int
    label: str
    latitude: float
    longitude: float

    def __post_init__(self):
        if not -90.0 <= self.latitude <= 90.0:
            raise ValueError(f"node {self.label!r}: latitude {self.latitude} out of range")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValueError(f"node {self.label!r}: longitude {self.longitude} out of range")


@dataclass(frozen=True)
class Link:
    endpoints: tuple[int, int]
    length: float
    delay: float
    label: str = ""


@dataclass(frozen=True)
class Topology:
    nodes: tuple[Node, ...]
    links: tuple[Link, ...]
    name: str = ""

    def __post_init__(self):
        ids = [n.id for n in self.nodes]
        if ids != list(range(len(ids))):
            raise ValueError("node ids must be 0..n-1 in order")
        seen = set()
        for link in self.links:
            a, b = link.endpoints
            if not (0 <= a < len(ids) and 0 <= b < len(ids)):
                raise ValueError(f"link {link.label!r} references a missing node")
            if a == b:
                raise ValueError(f"link {link.label!r} is a self-loop")
            key = (min(a, b), max(a, b))
            if key in seen:
                raise ValueError(f"duplicate link between {a} and {b}")
            seen.add(key)
            if not link.delay > 0:
                raise ValueError(f"link {link.label!r} has non-positive delay")

    @property
    def n(self) -> int:
        return len(self.nodes)

    def node_by_label(self, label: str) -> Node:
        for node in self.nodes:
            if node.label == label:
                return node
        raise KeyError(label)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "nodes": [
                {"id": n.id, "label": n.label, "latitude": n.latitude, "longitude": n.longitude}
                for n in self.nodes
            ],
            "links": [
                {"label": l.label, "endpoints": list(l.endpoints), "length_km": l.length, "delay_ms": l.delay}
                for l in self.links
            ],
        }


@dataclass(frozen=True)
class DelayMatrix:
    """Shortest-path propagation delay (ms) between every node pair.

    Disconnected pairs hold ``inf``. The array is read-only.
    """

    delay: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.delay, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "delay", arr)

    @property
    def n(self) -> int:
        return self.delay.shape[0]

    def __getitem__(self, ij):
        return self.delay[ij]

    def is_connected(self) -> bool:
        return bool(np.all(np.isfinite(self.delay)))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "delay_ms": [[None if math.isinf(v) else v for v in row] for row in self.delay.tolist()],
        }


def haversine_km(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dphi = p2 - p1
    dlmb = math.radians(lon2 - lon1)
    h = math.sin(dphi / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dlmb / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def link_between(a: Node, b: Node, label: str = "") -> Link:
    length = haversine_km(a.latitude, a.longitude, b.latitude, b.longitude)
    return Link((a.id, b.id), length, length / FIBER_KM_PER_MS, label)


_SECTION_RE = re.compile(r"^([A-Z_]+)\s*\($")
_NODE_RE = re.compile(r"^(\S+)\s*\(\s*(\S+)\s+(\S+)\s*\)$")
_LINK_RE = re.compile(r"^(\S+)\s*\(\s*(\S+)\s+(\S+)\s*\)(.*)$")


def _strip(line: str) -> str:
    if line.lstrip().startswith("?"):
        return ""
    return line.split("#", 1)[0].strip()


def parse_sndlib(text: str, name: str = "") -> Topology:
    """Parse the NODES/LINKS subset of the SNDlib native format.

    Other sections (META, DEMANDS, ...) are skipped. Link lengths come from
    the great-circle distance between endpoint coordinates.

    Raises TopologyParseError (carrying the 1-based line number) for a
    malformed section header, a duplicate node id, a link to an undeclared
    node, a self-loop, or a bad coordinate.
    """
    if not name:
        m = re.search(r"^#\s*network\s+(\S+)", text, re.MULTILINE)
        name = m.group(1) if m else ""

    nodes: list[Node] = []
    index: dict[str, int] = {}
    best: dict[tuple[int, int], Link] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        if section is None:
            m = _SECTION_RE.match(line)
            if not m:
                raise TopologyParseError(f"malformed section header {line!r}", lineno)
            section = m.group(1)
            continue
        if line == ")":
            section = None
            continue
        if section == "NODES":
            m = _NODE_RE.match(line)
            if not m:
                raise TopologyParseError(f"malformed node entry {line!r}", lineno)
            label = m.group(1)
            if label in index:
                raise TopologyParseError(f"duplicate node id {label!r}", lineno)
            try:
                lon, lat = float(m.group(2)), float(m.group(3))
                node = Node(len(nodes), label, lat, lon)
            except ValueError as exc:
                raise TopologyParseError(str(exc), lineno) from None
            index[label] = node.id
            nodes.append(node)
        elif section == "LINKS":
            m = _LINK_RE.match(line)
            if not m:
                raise TopologyParseError(f"malformed link entry {line!r}", lineno)
            label, src, dst = m.group(1), m.group(2), m.group(3)
            for end in (src, dst):
                if end not in index:
                    raise TopologyParseError(f"link {label!r} references unknown node {end!r}", lineno)
            a, b = index[src], index[dst]
            if a == b:
                raise TopologyParseError(f"link {label!r} is a self-loop", lineno)
            link = link_between(nodes[a], nodes[b], label)
            key = (min(a, b), max(a, b))
            if key in best:
                warnings.warn(
                    f"line {lineno}: parallel link {label!r} between {src} and {dst}; keeping the shorter one",
                    stacklevel=2,
                )
                if link.delay >= best[key].delay:
                    continue
            best[key] = link
        # remaining sections are ignored
    if section is not None:
        raise TopologyParseError(f"section {section} is not closed", lineno)
    return Topology(tuple(nodes), tuple(best.values()), name)


def to_sndlib(topology: Topology) -> str:
    lines = ["?SNDlib native format; type: network; version: 1.0"]
    if topology.name:
        lines.append(f"# network {topology.name}")
    lines += ["", "NODES ("]
    for n in topology.nodes:
        lines.append(f"  {n.label} ( {n.longitude!r} {n.latitude!r} )")
    lines += [")", "", "LINKS ("]
    for i, l in enumerate(topology.links, start=1):
        a, b = l.endpoints
        label = l.label or f"L{i}"
        lines.append(
            f"  {label} ( {topology.nodes[a].label} {topology.nodes[b].label} ) 0.00 0.00 0.00 0.00 ( )"
        )
    lines += [")", ""]
    return "\n".join(lines)


def load_topology(path: str | Path | None = None) -> Topology:
    """Read a topology file; ``None`` loads the bundled germany50."""
    if path is None:
        text = resources.files("mecplace.data").joinpath("germany50.txt").read_text()
        return parse_sndlib(text)
    return parse_sndlib(Path(path).read_text())


def all_pairs_delay(topology: Topology) -> DelayMatrix:
    n = topology.n
    adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for link in topology.links:
        a, b = link.endpoints
        adj[a].append((b, link.delay))
        adj[b].append((a, link.delay))

    dist = np.full((n, n), np.inf)
    for src in range(n):
        row = dist[src]
        row[src] = 0.0
        heap = [(0.0, src)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > row[u]:
                continue
            for v, w in adj[u]:
                nd = d + w
                if nd < row[v]:
                    row[v] = nd
                    heapq.heappush(heap, (nd, v))
    # force exact symmetry; the two directions can differ in the last ulp
    dist = np.minimum(dist, dist.T)
    return DelayMatrix(dist)


def dump_topology(topology: Topology, delays: DelayMatrix, path: str | Path) -> None:
    payload = {"topology": topology.to_dict(), "delays": delays.to_dict()}
    Path(path).write_text(json.dumps(payload, indent=1))
