"""Requests, resources and placements, plus the cost evaluator and feasibility checker."""

from __future__ import annotations

import json
import math
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import UnresolvedReferenceError
from .topology import DelayMatrix

PRIMARY = "primary"
BACKUP = "backup"
ROLES = (PRIMARY, BACKUP)

# slack for float comparisons of delays and loads
EPS = 1e-9


@dataclass(frozen=True)
class ServiceType:
    id: int
    name: str
    data_rate: float
    max_delay: float

    def __post_init__(self):
        if self.data_rate <= 0 or self.max_delay <= 0:
            raise ValueError(f"service type {self.name!r}: rate and delay must be positive")


DEFAULT_SERVICE_TYPES = (
    ServiceType(0, "AR/VR", 200.0, 2.0),
    ServiceType(1, "V2X", 100.0, 3.0),
    ServiceType(2, "e-health", 100.0, 5.0),
    ServiceType(3, "8K TV and Gaming", 200.0, 10.0),
)


@dataclass(frozen=True)
class ServiceRequest:
    id: int
    vnf_type: int
    attach_node: int
    data_rate: float
    max_delay: float

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "type": self.vnf_type,
            "node": self.attach_node,
            "rate_mbps": self.data_rate,
            "max_delay_ms": self.max_delay,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ServiceRequest":
        return cls(int(d["id"]), int(d["type"]), int(d["node"]), float(d["rate_mbps"]), float(d["max_delay_ms"]))


@dataclass(frozen=True)
class ResourceSpec:
    servers_per_site: int = 10
    server_cores: int = 16
    vnf_cores: int = 4
    vnf_throughput: float = 1000.0
    vnf_processing_delay: float = 0.05

    def __post_init__(self):
        if min(self.servers_per_site, self.server_cores, self.vnf_cores, self.vnf_throughput) <= 0:
            raise ValueError("resource figures must be positive")
        if self.vnf_processing_delay < 0:
            raise ValueError("processing delay must be non-negative")
        if self.vnf_cores > self.server_cores:
            raise ValueError("a VNF does not fit on a server")

    @property
    def vnfs_per_server(self) -> int:
        return self.server_cores // self.vnf_cores

    def instances_needed(self, load: float) -> int:
        if load <= EPS:
            return 0
        return max(1, math.ceil(load / self.vnf_throughput - EPS))


@dataclass(frozen=True)
class CostModel:
    server_cost: float = 100.0
    vnf_cost: float = 10.0
    traffic_cost: float = 1.0
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    # multiply forwarding cost by the site-to-node delay (off: one charge per Mbps)
    delay_weighted_traffic: bool = False

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.weights) != 3:
            raise ValueError("weights must have three entries")
        if min(self.server_cost, self.vnf_cost, self.traffic_cost, *self.weights) < 0:
            raise ValueError("cost coefficients must be non-negative")

    def scaled(self, factor: float) -> "CostModel":
        return replace(
            self,
            server_cost=self.server_cost * factor,
            vnf_cost=self.vnf_cost * factor,
            traffic_cost=self.traffic_cost * factor,
        )


class Slot(NamedTuple):
    site: int
    server: int
    vnf_type: int
    role: str

    @property
    def host(self) -> tuple[int, int]:
        return (self.site, self.server)


@dataclass(frozen=True, eq=True)
class Solution:
    sites_used: frozenset = frozenset()
    active_servers: frozenset = frozenset()
    vnf_instances: Mapping[Slot, int] = field(default_factory=dict)
    assignments: Mapping[int, tuple[Slot, Slot]] = field(default_factory=dict)

    __hash__ = None

    @classmethod
    def from_assignments(
        cls, assignments: Mapping[int, tuple[Slot, Slot]], requests, resources: ResourceSpec
    ) -> "Solution":
        """Canonical solution: the fewest instances that carry each slot's pooled load."""
        reqs = _request_map(requests)
        load: dict[Slot, float] = defaultdict(float)
        for rid, pair in assignments.items():
            for slot in pair:
                load[slot] += _lookup(reqs, rid).data_rate
        instances = {slot: resources.instances_needed(l) for slot, l in load.items()}
        return cls._build(instances, assignments)

    @classmethod
    def _build(cls, instances, assignments) -> "Solution":
        instances = {Slot(*k): int(v) for k, v in sorted(instances.items()) if v > 0}
        servers = frozenset(s.host for s in instances)
        return cls(
            frozenset(site for site, _ in servers),
            servers,
            instances,
            {int(r): (Slot(*p), Slot(*b)) for r, (p, b) in sorted(assignments.items())},
        )

    def without_request(self, rid: int) -> "Solution":
        """Drop one request's assignments along with any instance left serving nobody."""
        assignments = {r: pair for r, pair in self.assignments.items() if r != rid}
        used = {slot for pair in assignments.values() for slot in pair}
        instances = {slot: c for slot, c in self.vnf_instances.items() if slot in used}
        return Solution._build(instances, assignments)

    def instance_count(self) -> int:
        return sum(self.vnf_instances.values())

    def to_dict(self) -> dict:
        return {
            "sites_used": sorted(self.sites_used),
            "active_servers": [list(s) for s in sorted(self.active_servers)],
            "vnf_instances": [
                {"site": s.site, "server": s.server, "vnf_type": s.vnf_type, "role": s.role, "count": c}
                for s, c in sorted(self.vnf_instances.items())
            ],
            "assignments": [
                {"request": rid, "primary": p._asdict(), "backup": b._asdict()}
                for rid, (p, b) in sorted(self.assignments.items())
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Solution":
        instances = {
            Slot(int(e["site"]), int(e["server"]), int(e["vnf_type"]), e["role"]): int(e["count"])
            for e in d.get("vnf_instances", [])
        }
        assignments = {
            int(a["request"]): (_slot(a["primary"]), _slot(a["backup"])) for a in d.get("assignments", [])
        }
        return cls(
            frozenset(int(s) for s in d.get("sites_used", [])),
            frozenset((int(a), int(b)) for a, b in d.get("active_servers", [])),
            instances,
            assignments,
        )


def _slot(d: dict) -> Slot:
    return Slot(int(d["site"]), int(d["server"]), int(d["vnf_type"]), d["role"])


def _request_map(requests) -> dict[int, ServiceRequest]:
    if isinstance(requests, Mapping):
        return dict(requests)
    out = {}
    for r in requests:
        if r.id in out:
            raise ValueError(f"duplicate request id {r.id}")
        out[r.id] = r
    return out


def _lookup(reqs: Mapping[int, ServiceRequest], rid: int) -> ServiceRequest:
    try:
        return reqs[rid]
    except KeyError:
        raise UnresolvedReferenceError(f"unknown request id {rid}") from None


@dataclass(frozen=True)
class Instance:
    """Everything a solver needs: requests, candidate sites, delays and prices."""

    requests: tuple[ServiceRequest, ...]
    delays: DelayMatrix
    sites: tuple[int, ...]
    resources: ResourceSpec = ResourceSpec()
    cost_model: CostModel = CostModel()
    site_anti_affinity: bool = False

    def __post_init__(self):
        object.__setattr__(self, "requests", tuple(self.requests))
        object.__setattr__(self, "sites", tuple(sorted(set(int(s) for s in self.sites))))
        _request_map(self.requests)
        for r in self.requests:
            if not 0 <= r.attach_node < self.delays.n:
                raise UnresolvedReferenceError(f"request {r.id} attaches to unknown node {r.attach_node}")
        for s in self.sites:
            if not 0 <= s < self.delays.n:
                raise UnresolvedReferenceError(f"unknown site {s}")

    @property
    def request_map(self) -> dict[int, ServiceRequest]:
        return {r.id: r for r in self.requests}

    def reach_delay(self, site: int, request: ServiceRequest) -> float:
        """Propagation plus one VNF processing delay."""
        return float(self.delays.delay[site, request.attach_node]) + self.resources.vnf_processing_delay

    def feasible_sites(self, request: ServiceRequest) -> list[int]:
        return [s for s in self.sites if self.reach_delay(s, request) <= request.max_delay + EPS]


class CostBreakdown(NamedTuple):
    total: float
    server: float
    vnf: float
    traffic: float


def traffic_charge(cm: CostModel, request: ServiceRequest, site: int, delays: DelayMatrix | None) -> float:
    if cm.delay_weighted_traffic:
        if delays is None:
            raise ValueError("delay-weighted traffic cost needs the delay matrix")
        return cm.traffic_cost * request.data_rate * float(delays.delay[site, request.attach_node])
    return cm.traffic_cost * request.data_rate


def evaluate_cost(solution: Solution, cost_model: CostModel, requests, delays: DelayMatrix | None = None) -> CostBreakdown:
    reqs = _request_map(requests)
    sc = cost_model.server_cost * len(solution.active_servers)
    vc = cost_model.vnf_cost * sum(solution.vnf_instances.values())
    tc = 0.0
    for rid, pair in solution.assignments.items():
        r = _lookup(reqs, rid)
        for slot in pair:
            tc += traffic_charge(cost_model, r, slot.site, delays)
    g1, g2, g3 = cost_model.weights
    return CostBreakdown(g1 * sc + g2 * vc + g3 * tc, sc, vc, tc)


def instance_cost(solution: Solution, instance: Instance) -> CostBreakdown:
    return evaluate_cost(solution, instance.cost_model, instance.requests, instance.delays)


class Violation(NamedTuple):
    constraint: str  # a..f
    entity: object
    detail: str


CONSTRAINTS = {
    "a": "server capacity",
    "b": "VNF throughput",
    "c": "delay",
    "d": "placement",
    "e": "anti-affinity",
    "f": "activation consistency",
}


@dataclass(frozen=True)
class FeasibilityReport:
    violations: tuple[Violation, ...]

    @property
    def feasible(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.feasible

    def codes(self) -> set[str]:
        return {v.constraint for v in self.violations}


def check_feasibility(
    solution: Solution,
    requests,
    delays: DelayMatrix,
    sites: Iterable[int],
    resources: ResourceSpec,
    *,
    rejected: Iterable[int] = (),
    site_anti_affinity: bool = False,
) -> FeasibilityReport:
    """List every violated constraint of a placement.

    Requests listed in ``rejected`` are exempt from the placement rule but
    must not be assigned. Unknown request ids, sites outside ``sites`` and
    server indices beyond ``resources.servers_per_site`` raise
    UnresolvedReferenceError rather than being reported.
    """
    reqs = _request_map(requests)
    sites = set(sites)
    rejected = set(rejected)
    out: list[Violation] = []

    def resolve(slot: Slot) -> None:
        if slot.site not in sites:
            raise UnresolvedReferenceError(f"unknown site {slot.site}")
        if not 0 <= slot.server < resources.servers_per_site:
            raise UnresolvedReferenceError(f"unknown server {slot.server} at site {slot.site}")
        if slot.role not in ROLES:
            raise UnresolvedReferenceError(f"unknown role {slot.role!r}")

    for slot in solution.vnf_instances:
        resolve(slot)
    for site, server in solution.active_servers:
        resolve(Slot(site, server, -1, PRIMARY))
    for rid in rejected:
        _lookup(reqs, rid)

    instances = {slot: c for slot, c in solution.vnf_instances.items() if c > 0}
    load: dict[Slot, float] = defaultdict(float)
    users: Counter = Counter()

    for rid, pair in solution.assignments.items():
        r = _lookup(reqs, rid)
        if len(pair) != 2:
            out.append(Violation("d", rid, "needs exactly one primary and one backup slot"))
            continue
        for slot in pair:
            resolve(slot)
        if rid in rejected:
            out.append(Violation("d", rid, "rejected request is assigned"))
        for slot, role in zip(pair, ROLES):
            if slot.role != role:
                out.append(Violation("d", rid, f"{role} slot has role {slot.role}"))
            if slot.vnf_type != r.vnf_type:
                out.append(Violation("d", rid, f"{role} slot hosts VNF type {slot.vnf_type}, needs {r.vnf_type}"))
            if slot not in instances:
                out.append(Violation("f", rid, f"{role} slot {tuple(slot)} has no deployed instance"))
            d = float(delays.delay[slot.site, r.attach_node]) + resources.vnf_processing_delay
            if d > r.max_delay + EPS:
                out.append(Violation("c", rid, f"{role} delay {d:.4f} ms exceeds {r.max_delay} ms"))
            load[slot] += r.data_rate
            users[slot] += 1
        p, b = pair
        if p.host == b.host:
            out.append(Violation("e", rid, f"primary and backup share server {p.host}"))
        elif site_anti_affinity and p.site == b.site:
            out.append(Violation("e", rid, f"primary and backup share site {p.site}"))

    for rid in sorted(set(reqs) - set(solution.assignments) - rejected):
        out.append(Violation("d", rid, "request is not assigned"))

    cores: dict[tuple[int, int], int] = defaultdict(int)
    for slot, count in instances.items():
        cores[slot.host] += resources.vnf_cores * count
        if load[slot] > resources.vnf_throughput * count + EPS:
            out.append(
                Violation("b", tuple(slot), f"load {load[slot]:g} Mbps over {count} instance(s)")
            )
        if users[slot] == 0:
            out.append(Violation("f", tuple(slot), "instance serves no request"))
    for host, used in sorted(cores.items()):
        if used > resources.server_cores:
            out.append(Violation("a", host, f"{used} cores on a {resources.server_cores}-core server"))

    hosts = set(cores)
    if set(solution.active_servers) != hosts:
        extra = sorted(set(solution.active_servers) - hosts)
        missing = sorted(hosts - set(solution.active_servers))
        out.append(Violation("f", "active_servers", f"idle but active: {extra}; hosting but inactive: {missing}"))
    if set(solution.sites_used) != {site for site, _ in solution.active_servers}:
        out.append(Violation("f", "sites_used", "does not match the sites of active servers"))
    return FeasibilityReport(tuple(out))


def check_instance(solution: Solution, instance: Instance, rejected: Iterable[int] = ()) -> FeasibilityReport:
    return check_feasibility(
        solution,
        instance.requests,
        instance.delays,
        instance.sites,
        instance.resources,
        rejected=rejected,
        site_anti_affinity=instance.site_anti_affinity,
    )


def generate_requests(
    count: int,
    nodes: Sequence[int] | int,
    seed: int,
    mix: Sequence[float] | None = None,
    service_types: Sequence[ServiceType] = DEFAULT_SERVICE_TYPES,
) -> list[ServiceRequest]:
    """Draw ``count`` requests with uniform attachment nodes and types drawn from ``mix``."""
    if count < 0:
        raise ValueError("count must be non-negative")
    k = len(service_types)
    if mix is None:
        mix = [1.0 / k] * k
    mix = np.asarray(mix, dtype=float)
    if mix.shape != (k,) or np.any(mix < 0) or abs(mix.sum() - 1.0) > 1e-9:
        raise ValueError(f"mix must be {k} non-negative probabilities summing to 1")
    nodes = np.arange(nodes) if isinstance(nodes, int) else np.asarray(nodes)
    rng = np.random.default_rng(seed)
    types = rng.choice(k, size=count, p=mix)
    where = rng.choice(nodes, size=count)
    out = []
    for i, (t, n) in enumerate(zip(types, where)):
        st = service_types[int(t)]
        out.append(ServiceRequest(i, st.id, int(n), st.data_rate, st.max_delay))
    return out


# --- file formats ---------------------------------------------------------


def dump_requests(requests: Iterable[ServiceRequest]) -> str:
    return json.dumps([r.to_dict() for r in requests], indent=1)


def load_requests(path: str | Path) -> list[ServiceRequest]:
    return [ServiceRequest.from_dict(d) for d in json.loads(Path(path).read_text())]


@dataclass(frozen=True)
class Config:
    cost_model: CostModel = CostModel()
    resources: ResourceSpec = ResourceSpec()
    service_types: tuple[ServiceType, ...] = DEFAULT_SERVICE_TYPES
    site_anti_affinity: bool = False

    def to_dict(self) -> dict:
        cm = asdict(self.cost_model)
        cm["weights"] = list(cm["weights"])
        return {
            "cost_model": cm,
            "resources": asdict(self.resources),
            "service_types": [asdict(s) for s in self.service_types],
            "site_anti_affinity": self.site_anti_affinity,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Config":
        cm = dict(d.get("cost_model", {}))
        if "weights" in cm:
            cm["weights"] = tuple(cm["weights"])
        types = d.get("service_types")
        return cls(
            CostModel(**cm),
            ResourceSpec(**d.get("resources", {})),
            tuple(ServiceType(**s) for s in types) if types else DEFAULT_SERVICE_TYPES,
            bool(d.get("site_anti_affinity", False)),
        )


def load_config(path: str | Path | None) -> Config:
    if path is None:
        return Config()
    return Config.from_dict(json.loads(Path(path).read_text()))
