"""Single-failure analysis of primary/backup placements."""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import UnresolvedReferenceError
from .model import EPS, Instance, Slot, Solution

VNF_INSTANCE = "vnf_instance"
SERVER = "server"


@dataclass(frozen=True)
class FailureScenario:
    kind: str
    target: tuple
    affected_requests: tuple[int, ...] = ()

    def hits(self, slot: Slot) -> bool:
        if self.kind == SERVER:
            return slot.host == self.target
        return slot == self.target

    def label(self) -> str:
        return f"{self.kind}:{'/'.join(str(x) for x in self.target)}"


def make_scenario(solution: Solution, kind: str, target) -> FailureScenario:
    if kind == SERVER:
        target = (int(target[0]), int(target[1]))
        if target not in solution.active_servers:
            raise UnresolvedReferenceError(f"server {target} is not active in the solution")
    elif kind == VNF_INSTANCE:
        target = Slot(*target)
        if solution.vnf_instances.get(target, 0) <= 0:
            raise UnresolvedReferenceError(f"no instance at slot {tuple(target)}")
    else:
        raise ValueError(f"unknown failure kind {kind!r}")
    probe = FailureScenario(kind, tuple(target))
    affected = tuple(rid for rid, (p, _) in sorted(solution.assignments.items()) if probe.hits(p))
    return FailureScenario(kind, target, affected)


def enumerate_single_failures(solution: Solution) -> list[FailureScenario]:
    """Every active server, then every deployed instance slot."""
    out = [make_scenario(solution, SERVER, h) for h in sorted(solution.active_servers)]
    out += [make_scenario(solution, VNF_INSTANCE, s) for s in sorted(solution.vnf_instances)]
    return out


def survives(
    solution: Solution, failure: FailureScenario | Sequence[FailureScenario], instance: Instance
) -> dict[int, bool]:
    """Per affected request, whether its backup alone still carries it.

    ``failure`` may be a list of scenarios that fail together. A request is
    affected when its primary is hit; it survives when the backup is not hit
    and the backup slot still meets the delay bound and carries its pooled
    load within the deployed instances.
    """
    failures = [failure] if isinstance(failure, FailureScenario) else list(failure)
    for f in failures:
        # re-validate against this solution
        make_scenario(solution, f.kind, f.target)

    requests = instance.request_map
    rs = instance.resources
    backup_load: dict[Slot, float] = defaultdict(float)
    for rid, (_, b) in solution.assignments.items():
        backup_load[b] += requests[rid].data_rate

    verdict = {}
    for rid, (p, b) in sorted(solution.assignments.items()):
        if not any(f.hits(p) for f in failures):
            continue
        r = requests[rid]
        ok = not any(f.hits(b) for f in failures)
        ok = ok and instance.reach_delay(b.site, r) <= r.max_delay + EPS
        ok = ok and backup_load[b] <= rs.vnf_throughput * solution.vnf_instances.get(b, 0) + EPS
        verdict[rid] = ok
    return verdict


def survival_table(solution: Solution, instance: Instance) -> list[dict]:
    rows = []
    for f in enumerate_single_failures(solution):
        verdict = survives(solution, f, instance)
        rows.append(
            {
                "scenario": f.label(),
                "kind": f.kind,
                "affected": len(verdict),
                "survived": sum(verdict.values()),
                "ok": all(verdict.values()),
            }
        )
    return rows


def rows_to_csv(rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=["scenario", "kind", "affected", "survived", "ok"], lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow(row)
    return buf.getvalue()
