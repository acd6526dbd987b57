"""One-pass placement heuristics: delay-ordered first fit, nearest site, first encountered."""

from __future__ import annotations

import time

from ..model import Instance, Solution
from .state import PlacementState, SolveReport, make_report, place_pair_first_fit


def by_urgency(instance: Instance):
    return sorted(instance.requests, key=lambda r: (r.max_delay, r.id))


def first_fit_state(instance: Instance) -> tuple[PlacementState, list[int]]:
    state = PlacementState(instance)
    rejected = []
    sites = instance.sites
    for r in by_urgency(instance):
        if not state.servable(r.id) or not place_pair_first_fit(state, r.id, sites, sites):
            rejected.append(r.id)
    return state, rejected


def sa_initial_solution(instance: Instance) -> Solution:
    """Starting point for annealing: tightest-deadline requests first, first fit."""
    state, _ = first_fit_state(instance)
    return state.to_solution()


def solve_greedy(instance: Instance) -> SolveReport:
    started = time.perf_counter()
    state = PlacementState(instance)
    rejected = []
    for r in by_urgency(instance):
        sites = sorted(state.feasible_sites[r.id], key=lambda s: (instance.delays.delay[s, r.attach_node], s))
        placed = False
        for i, site in enumerate(sites):
            host = state.first_fit(r.id, 0, [site])
            if host is None:
                continue
            state.place(r.id, 0, host)
            # backup: same site when a second server fits, else the next-nearest ones
            backup_sites = sites[i:] if not instance.site_anti_affinity else sites[i + 1:]
            backup_sites = backup_sites + [s for s in sites[:i] if s not in backup_sites]
            for s in backup_sites:
                b = state.first_fit(r.id, 1, [s])
                if b is not None:
                    state.place(r.id, 1, b)
                    placed = True
                    break
            if placed:
                break
            state.unplace(r.id, 0)
        if not placed:
            rejected.append(r.id)
    return make_report("greedy", instance, state.to_solution(), rejected, 1, started)


def solve_baseline(instance: Instance) -> SolveReport:
    """Take the first host in (site id, server index) order that satisfies everything."""
    started = time.perf_counter()
    state = PlacementState(instance)
    hosts = [(s, k) for s in instance.sites for k in range(state.n_servers)]
    rejected = []
    for r in instance.requests:
        placed = False
        for i, host in enumerate(hosts):
            if not state.fits(r.id, 0, host):
                continue
            state.place(r.id, 0, host)
            # resume the scan after the primary, wrapping around
            for b in hosts[i + 1:] + hosts[:i]:
                if state.fits(r.id, 1, b):
                    state.place(r.id, 1, b)
                    placed = True
                    break
            if placed:
                break
            state.unplace(r.id, 0)
        if not placed:
            rejected.append(r.id)
    return make_report("baseline", instance, state.to_solution(), rejected, 1, started)
