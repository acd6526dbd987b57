"""Request-count sweeps over all solvers, with deterministic CSV output."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .centrality import _require_connected, select_sites_cc, select_sites_random, select_sites_top_k
from .errors import InstanceTooLargeError, MecPlaceError
from .model import Config, Instance, generate_requests
from .solvers import SOLVERS, ExactLimits, SaParams, run_solver
from .topology import DelayMatrix, all_pairs_delay, load_topology

RAW_COLUMNS = (
    "count", "seed", "solver", "total_cost", "server_cost", "vnf_cost", "traffic_cost",
    "active_servers", "vnf_instances", "rejected", "evaluated",
)
AGG_COLUMNS = (
    "count", "solver", "runs", "total_cost", "server_cost", "vnf_cost", "traffic_cost",
    "active_servers", "vnf_instances", "rejected", "evaluated",
)
TIMING_COLUMNS = ("count", "seed", "solver", "wall_time_s")
FIG2_COLUMNS = ("k", "method", "avg_delay_ms", "max_delay_ms", "within_dmax")


class HarnessError(MecPlaceError):
    pass


@dataclass(frozen=True)
class ExperimentPlan:
    topology: str | None = None  # None: bundled germany50
    d_max: float = 2.0
    num_sites: int | None = None  # top-k CC sites instead of the d_max rule
    counts: tuple[int, ...] = (4, 6, 8, 10)
    seeds: int = 5
    solvers: tuple[str, ...] = SOLVERS
    config: dict = field(default_factory=lambda: {"resources": {"servers_per_site": 2}})
    sa: dict = field(default_factory=dict)
    exact_limits: dict = field(default_factory=dict)
    output_dir: str = "bench-out"
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        object.__setattr__(self, "solvers", tuple(self.solvers))
        if not self.counts:
            raise ValueError("the request-count sweep is empty")
        if self.seeds < 1:
            raise ValueError("need at least one seed per point")
        unknown = set(self.solvers) - set(SOLVERS)
        if unknown:
            raise ValueError(f"unknown solvers {sorted(unknown)}")

    @classmethod
    def desk(cls, **kw) -> "ExperimentPlan":
        kw.setdefault("num_sites", 3)
        return cls(**kw)

    @classmethod
    def full_scale(cls, **kw) -> "ExperimentPlan":
        base = dict(
            counts=(50, 100, 150, 200),
            seeds=20,
            config={"resources": {"servers_per_site": 10}},
        )
        base.update(kw)
        return cls(**base)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["counts"] = list(self.counts)
        d["solvers"] = list(self.solvers)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentPlan":
        return cls(**d)

    def config_hash(self) -> str:
        d = self.to_dict()
        d.pop("output_dir")
        d.pop("workers")
        blob = json.dumps(d, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _sites(plan: ExperimentPlan, delays: DelayMatrix) -> tuple[int, ...]:
    if plan.num_sites is not None:
        return select_sites_top_k(delays, plan.num_sites).sites
    return select_sites_cc(delays, plan.d_max).sites


def _cell(args):
    plan, delays, sites, count, seed, solver = args
    config = Config.from_dict(plan.config)
    requests = generate_requests(count, delays.n, seed)
    instance = Instance(
        requests, delays, sites, config.resources, config.cost_model, config.site_anti_affinity
    )
    try:
        report = run_solver(
            solver, instance, SaParams(**{**plan.sa, "seed": seed}), ExactLimits(**plan.exact_limits)
        )
    except InstanceTooLargeError:
        return None
    except Exception as exc:
        raise HarnessError(f"solver {solver} failed at count={count} seed={seed}: {exc}") from exc
    row = {
        "count": count,
        "seed": seed,
        "solver": solver,
        "total_cost": report.cost.total,
        "server_cost": report.cost.server,
        "vnf_cost": report.cost.vnf,
        "traffic_cost": report.cost.traffic,
        "active_servers": len(report.solution.active_servers),
        "vnf_instances": report.solution.instance_count(),
        "rejected": len(report.rejected),
        "evaluated": report.iterations_evaluated,
    }
    return row, report.wall_time


def aggregate(raw: list[dict]) -> list[dict]:
    groups: dict[tuple, list[dict]] = {}
    for row in raw:
        groups.setdefault((row["count"], row["solver"]), []).append(row)
    out = []
    for (count, solver), rows in groups.items():
        agg = {"count": count, "solver": solver, "runs": len(rows)}
        for col in AGG_COLUMNS[3:]:
            agg[col] = float(np.mean([r[col] for r in rows]))
        out.append(agg)
    return out


def run_experiment(plan: ExperimentPlan, write: bool = True) -> dict:
    """Run every (count, seed, solver) cell and return raw, aggregate and timing rows.

    Exact-solver cells over its caps are left out and listed in the manifest.
    With ``write``, CSVs and ``manifest.json`` go to ``plan.output_dir``.
    """
    topology = load_topology(plan.topology)
    delays = all_pairs_delay(topology)
    _require_connected(delays)
    sites = _sites(plan, delays)

    cells = [
        (plan, delays, sites, count, seed, solver)
        for count in plan.counts
        for seed in range(plan.seeds)
        for solver in plan.solvers
    ]
    if plan.workers > 1:
        with ProcessPoolExecutor(plan.workers) as pool:
            results = list(pool.map(_cell, cells))
    else:
        results = [_cell(c) for c in cells]

    raw, timing, skipped = [], [], []
    for (_, _, _, count, seed, solver), res in zip(cells, results):
        if res is None:
            skipped.append({"count": count, "seed": seed, "solver": solver, "reason": "over exact-solver cap"})
            continue
        row, wall = res
        raw.append(row)
        timing.append({"count": count, "seed": seed, "solver": solver, "wall_time_s": wall})

    manifest = {
        "tool_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "config_hash": plan.config_hash(),
        "plan": plan.to_dict(),
        "topology": topology.name,
        "sites": list(sites),
        "seeds": list(range(plan.seeds)),
        "skipped_cells": skipped,
        "notes": "raw.csv and agg.csv are deterministic for a given plan; wall times live in timing.csv",
    }
    result = {"raw": raw, "agg": aggregate(raw), "timing": timing, "manifest": manifest}
    if write:
        out = Path(plan.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "raw.csv").write_text(to_csv(raw, RAW_COLUMNS))
        (out / "agg.csv").write_text(to_csv(result["agg"], AGG_COLUMNS))
        (out / "timing.csv").write_text(to_csv(timing, TIMING_COLUMNS))
        (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True))
    return result


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def to_csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def emit_fig2_table(delays: DelayMatrix, d_max: float, ks, seeds: int = 100) -> list[dict]:
    """Coverage of top-k CC siting against random siting averaged over ``seeds`` draws."""
    _require_connected(delays)
    rows = []
    for k in ks:
        cc = select_sites_top_k(delays, k)
        rows.append(
            {"k": k, "method": "cc", "avg_delay_ms": cc.avg_delay, "max_delay_ms": cc.max_delay,
             "within_dmax": cc.max_delay <= d_max}
        )
        draws = [select_sites_random(delays, k, s) for s in range(seeds)]
        avg = float(np.mean([d.avg_delay for d in draws]))
        mx = float(np.mean([d.max_delay for d in draws]))
        rows.append(
            {"k": k, "method": "random", "avg_delay_ms": avg, "max_delay_ms": mx, "within_dmax": mx <= d_max}
        )
    return rows


def with_output(plan: ExperimentPlan, output_dir: str) -> ExperimentPlan:
    return replace(plan, output_dir=output_dir)
