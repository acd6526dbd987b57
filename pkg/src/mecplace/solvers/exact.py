"""Exact placement by depth-first branch and bound.

Requests are branched in descending data-rate order over (primary host,
backup host) pairs, with rejection as the last resort. The objective is
lexicographic: fewest rejected requests, then least cost. Servers within a
site are interchangeable, so a new server is only opened at the lowest idle
index.

Lower bound at a node (all remaining requests served):

* traffic: incurred plus the cheapest reachable site per remaining role;
* instances: per (VNF type, role) at least the current count and at least
  enough pooled throughput for current plus remaining load;
* servers: at least the active count, at least what the instance bound
  needs in cores, and at least two once anything is served.
"""

from __future__ import annotations

import math
import time
from collections import defaultdict
from dataclasses import dataclass

from ..errors import InstanceTooLargeError
from ..model import Instance
from .heuristics import first_fit_state
from .state import PlacementState, SolveReport, make_report


@dataclass(frozen=True)
class ExactLimits:
    max_requests: int = 12
    max_sites: int = 5
    max_servers_per_site: int = 3


def _check_limits(instance: Instance, limits: ExactLimits) -> None:
    problems = []
    if len(instance.requests) > limits.max_requests:
        problems.append(f"{len(instance.requests)} requests > {limits.max_requests}")
    if len(instance.sites) > limits.max_sites:
        problems.append(f"{len(instance.sites)} sites > {limits.max_sites}")
    if instance.resources.servers_per_site > limits.max_servers_per_site:
        problems.append(f"{instance.resources.servers_per_site} servers/site > {limits.max_servers_per_site}")
    if problems:
        raise InstanceTooLargeError("instance exceeds exact-solver caps: " + ", ".join(problems))


def solve_exact(instance: Instance, limits: ExactLimits = ExactLimits(), use_bound: bool = True) -> SolveReport:
    _check_limits(instance, limits)
    started = time.perf_counter()

    incumbent, ff_rejected = first_fit_state(instance)
    state = PlacementState(instance)
    unservable = [r.id for r in instance.requests if not state.servable(r.id)]
    order = sorted(
        (r for r in instance.requests if state.servable(r.id)), key=lambda r: (-r.data_rate, r.id)
    )

    g1, g2, g3 = instance.cost_model.weights
    server_price = g1 * instance.cost_model.server_cost
    vnf_price = g2 * instance.cost_model.vnf_cost

    # suffix sums over the branching order
    n = len(order)
    rem_load = [defaultdict(float) for _ in range(n + 1)]
    rem_tc = [0.0] * (n + 1)
    for i in range(n - 1, -1, -1):
        r = order[i]
        rem_load[i] = defaultdict(float, rem_load[i + 1])
        rem_load[i][r.vnf_type] += r.data_rate
        cheapest = min(state.tc[r.id, s] for s in state.feasible_sites[r.id])
        rem_tc[i] = rem_tc[i + 1] + 2 * cheapest
    types = sorted({r.vnf_type for r in order})

    def bound(i: int) -> float:
        instances = 0
        for v in types:
            extra = rem_load[i].get(v, 0.0)
            for role in (0, 1):
                key = (v, role)
                need = state.needed(state.type_load[key] + extra)
                instances += max(state.type_count[key], need)
        servers = max(len(state.used), math.ceil(instances / state.max_per_server))
        if instances:
            servers = max(servers, 2)
        return server_price * servers + vnf_price * instances + g3 * (state.tc_sum + rem_tc[i])

    best = [len(ff_rejected) - len(unservable), incumbent.cost(), incumbent.snapshot()]
    nodes = 0

    def better(rejects: int, cost: float) -> bool:
        return rejects < best[0] or (rejects == best[0] and cost < best[1] - 1e-9)

    def candidates(rid: int, role: int):
        hosts = state.open_hosts(state.feasible_sites[rid])
        return [h for h in hosts if state.fits(rid, role, h)]

    def dfs(i: int, rejects: int) -> None:
        nonlocal nodes
        nodes += 1
        if i == n:
            if better(rejects, state.cost()):
                best[:] = [rejects, state.cost(), state.snapshot()]
            return
        if use_bound and not better(rejects, bound(i)):
            return
        rid = order[i].id
        for p in candidates(rid, 0):
            state.place(rid, 0, p)
            for b in candidates(rid, 1):
                state.place(rid, 1, b)
                dfs(i + 1, rejects)
                state.unplace(rid, 1)
            state.unplace(rid, 0)
        if better(rejects + 1, 0.0):
            dfs(i + 1, rejects + 1)

    dfs(0, 0)

    snap = best[2]
    rejected = sorted(set(unservable) | ({r.id for r in instance.requests} - set(snap)))
    return make_report(
        "exact", instance, state.to_solution(snap), rejected, nodes, started, {"pruning": use_bound}
    )
