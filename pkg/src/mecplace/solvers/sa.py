"""Simulated annealing over primary/backup placements."""

from __future__ import annotations

import math
import random
import time
from dataclasses import asdict, dataclass

from ..model import Instance, Solution
from .heuristics import first_fit_state
from .state import PlacementState, SolveReport, make_report

DEFAULT_MOVE_PROBS = (0.5, 0.3, 0.2)  # reassign, migrate, consolidate


@dataclass(frozen=True)
class SaParams:
    t0: float = 100.0
    t_min: float = 0.1
    alpha: float = 0.9
    max_iterations: int = 50
    seed: int = 0
    move_probs: tuple[float, float, float] = DEFAULT_MOVE_PROBS
    retries: int = 20

    def __post_init__(self):
        if not self.t0 > self.t_min > 0:
            raise ValueError("need t0 > t_min > 0")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if len(self.move_probs) != 3 or min(self.move_probs) < 0 or abs(sum(self.move_probs) - 1) > 1e-9:
            raise ValueError("move_probs must be three probabilities summing to 1")

    def outer_iterations(self) -> int:
        t, k = self.t0, 0
        while t > self.t_min:
            k += 1
            t *= self.alpha
        return k


def _reassign(state: PlacementState, rng: random.Random, served: list[int]):
    if not served:
        return None
    rid = rng.choice(served)
    role = rng.randrange(2)
    current = state.assign[rid][role]
    hosts = [
        h for h in state.open_hosts(state.feasible_sites[rid]) if h != current and state.fits(rid, role, h)
    ]
    if not hosts:
        return None
    return [(rid, role, rng.choice(hosts))]


def _group_targets(state: PlacementState, slot: tuple, hosts) -> list:
    """Hosts able to absorb every request of ``slot`` at once."""
    rids = sorted(state.members[slot])
    load = state.load[slot]
    key = (slot[2], slot[3])
    role = slot[3]
    out = []
    for host in hosts:
        if host == (slot[0], slot[1]):
            continue
        if any(state.conflicts(rid, role, host) for rid in rids):
            continue
        target = (host[0], host[1]) + key
        if state.extra_instances(target, load) <= state.room(host):
            out.append(host)
    return out


def _common_sites(state: PlacementState, slot: tuple) -> list[int]:
    rids = sorted(state.members[slot])
    sites = set(state.feasible_sites[rids[0]])
    for rid in rids[1:]:
        sites &= state._feasible_set[rid]
    return sorted(sites)


def _migrate(state: PlacementState, rng: random.Random, served: list[int]):
    slots = sorted(state.count)
    if not slots:
        return None
    slot = rng.choice(slots)
    hosts = _group_targets(state, slot, state.open_hosts(_common_sites(state, slot)))
    if not hosts:
        return None
    host = rng.choice(hosts)
    return [(rid, slot[3], host) for rid in sorted(state.members[slot])]


def _consolidate(state: PlacementState, rng: random.Random, served: list[int]):
    slots = sorted(state.count)
    if not slots:
        return None
    slot = rng.choice(slots)
    sites = set(_common_sites(state, slot))
    partners = sorted(
        (s[0], s[1]) for s in state.count if s[2:] == slot[2:] and s != slot and s[0] in sites
    )
    candidates = []
    for host in _group_targets(state, slot, partners):
        target = host + slot[2:]
        # the partner must take the load without a new instance
        if state.extra_instances(target, state.load[slot]) == 0:
            candidates.append(host)
    if not candidates:
        return None
    host = rng.choice(candidates)
    return [(rid, slot[3], host) for rid in sorted(state.members[slot])]


_MOVES = (_reassign, _migrate, _consolidate)


def propose(state: PlacementState, rng: random.Random, served: list[int], probs=DEFAULT_MOVE_PROBS, retries=20):
    """A list of (request, role, host) moves keeping every constraint, or None."""
    for _ in range(retries):
        u = rng.random()
        idx = 0 if u < probs[0] else 1 if u < probs[0] + probs[1] else 2
        move = _MOVES[idx](state, rng, served)
        if move is not None:
            return move
    return None


def sa_neighbor(
    solution: Solution, instance: Instance, rng: random.Random, probs=DEFAULT_MOVE_PROBS, retries: int = 20
) -> Solution:
    """One random move away from ``solution``; the input itself if no move applies."""
    state = PlacementState.from_solution(instance, solution)
    served = sorted(solution.assignments)
    move = propose(state, rng, served, probs, retries)
    if move is None:
        return solution
    state.apply(move)
    return state.to_solution()


def solve_sa(instance: Instance, params: SaParams = SaParams()) -> SolveReport:
    started = time.perf_counter()
    rng = random.Random(params.seed)
    state, rejected = first_fit_state(instance)
    served = sorted(state.assign)

    current = state.cost()
    best, best_snap = current, state.snapshot()
    evaluated = 0
    t = params.t0
    while t > params.t_min:
        for _ in range(params.max_iterations):
            move = propose(state, rng, served, params.move_probs, params.retries)
            if move is None:
                continue
            undo = state.apply(move)
            candidate = state.cost()
            evaluated += 1
            if candidate <= current or rng.random() < math.exp((current - candidate) / t):
                current = candidate
                if current < best - 1e-9:
                    best, best_snap = current, state.snapshot()
            else:
                state.apply(undo)
        t *= params.alpha

    p = asdict(params)
    p["move_probs"] = list(p["move_probs"])
    return make_report("sa", instance, state.to_solution(best_snap), rejected, evaluated, started, p)
