"""Mutable placement bookkeeping shared by the solvers.

A request's primary (role 0) and backup (role 1) each sit on a host, i.e. a
``(site, server)`` pair. Instances are pooled per slot
``(site, server, vnf_type, role)``: a slot carrying load L holds the fewest
instances whose combined throughput covers L. Cost terms are kept
incrementally so that a move can be applied, priced and undone cheaply.
"""

from __future__ import annotations

import time
from collections import defaultdict
from dataclasses import dataclass, field

from ..model import (
    ROLES,
    CostBreakdown,
    Instance,
    Slot,
    Solution,
    instance_cost,
    traffic_charge,
)

Host = tuple  # (site, server)


class PlacementState:
    def __init__(self, instance: Instance):
        self.instance = instance
        self.rs = instance.resources
        cm = instance.cost_model
        g1, g2, g3 = cm.weights
        self._server_price = g1 * cm.server_cost
        self._vnf_price = g2 * cm.vnf_cost
        self._traffic_weight = g3
        self.max_per_server = self.rs.vnfs_per_server
        self.requests = instance.request_map
        self.n_servers = self.rs.servers_per_site
        self.feasible_sites: dict[int, tuple[int, ...]] = {}
        self.tc: dict[tuple[int, int], float] = {}
        for r in instance.requests:
            sites = tuple(instance.feasible_sites(r))
            self.feasible_sites[r.id] = sites
            for s in sites:
                self.tc[r.id, s] = traffic_charge(cm, r, s, instance.delays)
        self._feasible_set = {rid: frozenset(s) for rid, s in self.feasible_sites.items()}

        self.assign: dict[int, list] = {}
        self.load: dict[tuple, float] = defaultdict(float)
        self.members: dict[tuple, set] = defaultdict(set)
        self.count: dict[tuple, int] = {}
        self.used: dict[Host, int] = {}  # instances per active host
        self.site_active: dict[int, set] = defaultdict(set)
        self.type_load: dict[tuple, float] = defaultdict(float)
        self.type_count: dict[tuple, int] = defaultdict(int)
        self.n_instances = 0
        self.tc_sum = 0.0

    # -- queries -----------------------------------------------------------

    def servable(self, rid: int) -> bool:
        """At least two distinct hosts exist within the delay bound."""
        sites = self.feasible_sites[rid]
        if self.instance.site_anti_affinity:
            return len(sites) >= 2
        return len(sites) * self.n_servers >= 2

    def cost(self) -> float:
        return (
            self._server_price * len(self.used)
            + self._vnf_price * self.n_instances
            + self._traffic_weight * self.tc_sum
        )

    def needed(self, load: float) -> int:
        return self.rs.instances_needed(load)

    def extra_instances(self, slot: tuple, add: float) -> int:
        return self.needed(self.load.get(slot, 0.0) + add) - self.count.get(slot, 0)

    def room(self, host: Host) -> int:
        return self.max_per_server - self.used.get(host, 0)

    def conflicts(self, rid: int, role: int, host: Host) -> bool:
        """True if ``host`` breaks anti-affinity against the request's other role."""
        pair = self.assign.get(rid)
        if pair is None:
            return False
        other = pair[1 - role]
        if other is None:
            return False
        if other == host:
            return True
        return self.instance.site_anti_affinity and other[0] == host[0]

    def fits(self, rid: int, role: int, host: Host) -> bool:
        if host[0] not in self._feasible_set[rid]:
            return False
        if self.conflicts(rid, role, host):
            return False
        r = self.requests[rid]
        slot = (host[0], host[1], r.vnf_type, role)
        return self.extra_instances(slot, r.data_rate) <= self.room(host)

    def slot_of(self, rid: int, role: int) -> tuple:
        host = self.assign[rid][role]
        return (host[0], host[1], self.requests[rid].vnf_type, role)

    def open_hosts(self, sites) -> list[Host]:
        """Active hosts at ``sites`` plus the lowest-index idle server of each."""
        out = []
        for site in sites:
            active = self.site_active.get(site, ())
            out.extend((site, k) for k in sorted(active))
            for k in range(self.n_servers):
                if k not in active:
                    out.append((site, k))
                    break
        return out

    # -- mutation ----------------------------------------------------------

    def _set_load(self, slot: tuple, delta: float) -> None:
        load = self.load[slot] + delta
        if not self.members[slot]:
            load = 0.0
        self.load[slot] = load
        tkey = (slot[2], slot[3])
        self.type_load[tkey] += delta
        new = self.needed(load) if self.members[slot] else 0
        old = self.count.get(slot, 0)
        if new == old:
            return
        diff = new - old
        self.n_instances += diff
        self.type_count[tkey] += diff
        host = (slot[0], slot[1])
        used = self.used.get(host, 0) + diff
        if new:
            self.count[slot] = new
        else:
            del self.count[slot]
            del self.load[slot]
            del self.members[slot]
        if used:
            if host not in self.used:
                self.site_active[host[0]].add(host[1])
            self.used[host] = used
        else:
            del self.used[host]
            self.site_active[host[0]].discard(host[1])

    def place(self, rid: int, role: int, host: Host) -> None:
        r = self.requests[rid]
        pair = self.assign.setdefault(rid, [None, None])
        assert pair[role] is None
        pair[role] = host
        slot = (host[0], host[1], r.vnf_type, role)
        self.members[slot].add(rid)
        self._set_load(slot, r.data_rate)
        self.tc_sum += self.tc[rid, host[0]]

    def unplace(self, rid: int, role: int) -> Host:
        r = self.requests[rid]
        pair = self.assign[rid]
        host = pair[role]
        pair[role] = None
        if pair[1 - role] is None:
            del self.assign[rid]
        slot = (host[0], host[1], r.vnf_type, role)
        self.members[slot].discard(rid)
        self._set_load(slot, -r.data_rate)
        self.tc_sum -= self.tc[rid, host[0]]
        return host

    def apply(self, moves) -> list:
        """Apply ``[(rid, role, host), ...]``; returns the moves that undo it."""
        undo = []
        for rid, role, host in moves:
            old = self.unplace(rid, role)
            undo.append((rid, role, old))
        for rid, role, host in moves:
            self.place(rid, role, host)
        return undo

    # -- first-fit ---------------------------------------------------------

    def first_fit(self, rid: int, role: int, sites) -> Host | None:
        """First host over ``sites`` preferring, in turn, a deployed instance
        with spare throughput, a new instance on an active server, and a new
        server (lowest index first)."""
        r = self.requests[rid]
        sites = [s for s in sites if s in self._feasible_set[rid]]
        for site in sites:
            for k in sorted(self.site_active.get(site, ())):
                host = (site, k)
                slot = (site, k, r.vnf_type, role)
                if slot in self.count and self.extra_instances(slot, r.data_rate) == 0:
                    if not self.conflicts(rid, role, host):
                        return host
        for site in sites:
            for k in sorted(self.site_active.get(site, ())):
                if self.fits(rid, role, (site, k)):
                    return (site, k)
        for site in sites:
            active = self.site_active.get(site, ())
            for k in range(self.n_servers):
                if k not in active and self.fits(rid, role, (site, k)):
                    return (site, k)
        return None

    # -- export ------------------------------------------------------------

    def snapshot(self) -> dict:
        return {rid: tuple(pair) for rid, pair in self.assign.items()}

    def restore(self, snap: dict) -> None:
        for rid in list(self.assign):
            for role in (0, 1):
                if self.assign.get(rid) and self.assign[rid][role] is not None:
                    self.unplace(rid, role)
        for rid, (p, b) in sorted(snap.items()):
            self.place(rid, 0, p)
            self.place(rid, 1, b)

    def to_solution(self, snap: dict | None = None) -> Solution:
        snap = self.snapshot() if snap is None else snap
        assignments = {}
        for rid, pair in snap.items():
            if None in pair:
                raise ValueError(f"request {rid} is half placed")
            t = self.requests[rid].vnf_type
            assignments[rid] = tuple(Slot(h[0], h[1], t, ROLES[i]) for i, h in enumerate(pair))
        return Solution.from_assignments(assignments, self.requests, self.rs)

    @classmethod
    def from_solution(cls, instance: Instance, solution: Solution) -> "PlacementState":
        state = cls(instance)
        for rid, (p, b) in sorted(solution.assignments.items()):
            state.place(rid, 0, p.host)
            state.place(rid, 1, b.host)
        return state


def place_pair_first_fit(state: PlacementState, rid: int, primary_sites, backup_sites) -> bool:
    """Place primary then backup by first fit; leaves nothing placed on failure."""
    host = state.first_fit(rid, 0, primary_sites)
    if host is None:
        return False
    state.place(rid, 0, host)
    b = state.first_fit(rid, 1, backup_sites)
    if b is None:
        state.unplace(rid, 0)
        return False
    state.place(rid, 1, b)
    return True


@dataclass
class SolveReport:
    solver: str
    solution: Solution
    cost: CostBreakdown
    rejected: tuple[int, ...] = ()
    iterations_evaluated: int = 0
    wall_time: float = 0.0
    params: dict = field(default_factory=dict)

    @property
    def total_cost(self) -> float:
        return self.cost.total

    def to_dict(self, timing: bool = True) -> dict:
        d = {
            "solver": self.solver,
            "params": self.params,
            "total_cost": self.cost.total,
            "server_cost": self.cost.server,
            "vnf_cost": self.cost.vnf,
            "traffic_cost": self.cost.traffic,
            "active_servers": len(self.solution.active_servers),
            "vnf_instances": self.solution.instance_count(),
            "rejected_requests": list(self.rejected),
            "iterations_evaluated": self.iterations_evaluated,
            "solution": self.solution.to_dict(),
        }
        if timing:
            d["wall_time_s"] = self.wall_time
        return d


def make_report(name, instance, solution, rejected, evaluated, started, params=None) -> SolveReport:
    return SolveReport(
        name,
        solution,
        instance_cost(solution, instance),
        tuple(sorted(rejected)),
        evaluated,
        time.perf_counter() - started,
        params or {},
    )
