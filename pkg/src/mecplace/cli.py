"""Command-line entry point: ``mecplace <select|fig2|requests|solve|verify|bench>``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .centrality import (
    SiteSelection,
    coverage_metrics,
    select_sites_cc,
    select_sites_random,
    select_sites_top_k,
)
from .harness import FIG2_COLUMNS, ExperimentPlan, emit_fig2_table, run_experiment, to_csv
from .model import Instance, Solution, check_instance, dump_requests, generate_requests, load_config, load_requests
from .solvers import SOLVERS, SaParams, run_solver
from .survivability import rows_to_csv, survival_table
from .topology import all_pairs_delay, dump_topology, load_topology


def _write(text: str, path: str | None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(path).write_text(text)


def _load_net(args):
    topology = load_topology(args.topology)
    delays = all_pairs_delay(topology)
    if getattr(args, "dump_topology", None):
        dump_topology(topology, delays, args.dump_topology)
    return topology, delays


def _sites(args, delays) -> tuple[int, ...]:
    if args.sites:
        return SiteSelection.from_dict(json.loads(Path(args.sites).read_text())).sites
    return select_sites_cc(delays, args.dmax).sites


def _instance(args, delays) -> Instance:
    config = load_config(args.config)
    requests = load_requests(args.requests)
    return Instance(
        requests,
        delays,
        _sites(args, delays),
        config.resources,
        config.cost_model,
        config.site_anti_affinity or args.site_anti_affinity,
    )


def cmd_select(args) -> int:
    _, delays = _load_net(args)
    if args.method == "cc":
        sel = select_sites_cc(delays, args.dmax)
    else:
        if args.k is None:
            raise SystemExit("--k is required with --method random")
        sel = select_sites_random(delays, args.k, args.seed)
    _write(json.dumps(sel.to_dict(), indent=1), args.out)
    if args.metrics_csv:
        rows = []
        for k in range(1, min(args.kmax, delays.n) + 1):
            if args.method == "cc":
                sites = select_sites_top_k(delays, k).sites
            else:
                sites = select_sites_random(delays, k, args.seed).sites
            avg, mx = coverage_metrics(delays, sites)
            rows.append({"k": k, "avg_delay_ms": avg, "max_delay_ms": mx, "method": args.method})
        Path(args.metrics_csv).write_text(to_csv(rows, ("k", "avg_delay_ms", "max_delay_ms", "method")))
    return 0


def cmd_fig2(args) -> int:
    _, delays = _load_net(args)
    rows = emit_fig2_table(delays, args.dmax, range(1, args.kmax + 1), args.seeds)
    _write(to_csv(rows, FIG2_COLUMNS), args.out)
    return 0


def cmd_requests(args) -> int:
    topology = load_topology(args.topology)
    types = load_config(args.config).service_types
    mix = [float(x) for x in args.mix.split(",")] if args.mix else None
    reqs = generate_requests(args.count, topology.n, args.seed, mix, types)
    _write(dump_requests(reqs), args.out)
    return 0


def cmd_solve(args) -> int:
    _, delays = _load_net(args)
    instance = _instance(args, delays)
    params = SaParams(t0=args.sa_t0, t_min=args.sa_tmin, alpha=args.sa_alpha, max_iterations=args.sa_iters, seed=args.seed)
    report = run_solver(args.solver, instance, params)
    _write(json.dumps(report.to_dict(timing=not args.no_timing), indent=1), args.out)
    return 0


def cmd_verify(args) -> int:
    _, delays = _load_net(args)
    instance = _instance(args, delays)
    data = json.loads(Path(args.solution).read_text())
    solution = Solution.from_dict(data.get("solution", data))
    rejected = data.get("rejected_requests", [])
    feas = check_instance(solution, instance, rejected)
    rows = survival_table(solution, instance)
    _write(rows_to_csv(rows), args.out)
    for v in feas.violations:
        print(f"violation ({v.constraint}) {v.entity}: {v.detail}", file=sys.stderr)
    ok = feas.feasible and all(r["ok"] for r in rows)
    print("PASS" if ok else "FAIL", file=sys.stderr)
    return 0 if ok else 1


def cmd_bench(args) -> int:
    if args.plan:
        plan = ExperimentPlan.from_dict(json.loads(Path(args.plan).read_text()))
    elif args.full_scale:
        plan = ExperimentPlan.full_scale()
    else:
        plan = ExperimentPlan.desk()
    if args.out_dir:
        plan = ExperimentPlan.from_dict({**plan.to_dict(), "output_dir": args.out_dir})
    result = run_experiment(plan)
    print(to_csv(result["agg"], tuple(result["agg"][0]) if result["agg"] else ("count",)), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mecplace", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def net(sp):
        sp.add_argument("--topology", help="SNDlib native file (default: bundled germany50)")
        sp.add_argument("--dump-topology", metavar="PATH", help="write topology and delay matrix as JSON")
        sp.add_argument("--dmax", type=float, default=2.0, help="max delay to the nearest site, ms")

    sp = sub.add_parser("select", help="choose MEC sites")
    net(sp)
    sp.add_argument("--method", choices=("cc", "random"), default="cc")
    sp.add_argument("--k", type=int)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--kmax", type=int, default=10)
    sp.add_argument("--metrics-csv", metavar="PATH")
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_select)

    sp = sub.add_parser("fig2", help="CC vs random siting coverage table")
    net(sp)
    sp.add_argument("--kmax", type=int, default=10)
    sp.add_argument("--seeds", type=int, default=100)
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_fig2)

    sp = sub.add_parser("requests", help="generate a request file")
    sp.add_argument("--topology")
    sp.add_argument("--config")
    sp.add_argument("--count", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--mix", help="comma-separated type probabilities")
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_requests)

    def inst(sp):
        net(sp)
        sp.add_argument("--requests", required=True)
        sp.add_argument("--config")
        sp.add_argument("--sites", help="SiteSelection JSON from `select` (default: CC with --dmax)")
        sp.add_argument("--site-anti-affinity", action="store_true")

    sp = sub.add_parser("solve", help="place primary and backup VNFs")
    inst(sp)
    sp.add_argument("--solver", choices=SOLVERS, default="sa")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--sa-t0", type=float, default=100.0)
    sp.add_argument("--sa-tmin", type=float, default=0.1)
    sp.add_argument("--sa-alpha", type=float, default=0.9)
    sp.add_argument("--sa-iters", type=int, default=50)
    sp.add_argument("--no-timing", action="store_true", help="omit wall time for byte-stable output")
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("verify", help="feasibility and single-failure survival of a solution")
    inst(sp)
    sp.add_argument("--solution", required=True, help="SolveReport or Solution JSON")
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("bench", help="run a request-count sweep")
    sp.add_argument("--plan", help="ExperimentPlan JSON")
    sp.add_argument("--full-scale", "--paper-scale", dest="full_scale", action="store_true", help="10 servers per site, 50-200 requests, 20 seeds")
    sp.add_argument("--out-dir")
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
