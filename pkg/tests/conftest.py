import numpy as np
import pytest

from mecplace import (
    CostModel,
    Instance,
    ResourceSpec,
    ServiceRequest,
    all_pairs_delay,
    generate_requests,
    load_topology,
    select_sites_cc,
)
from mecplace.topology import DelayMatrix, Link, Node, Topology


def make_topology(n, edges, name="t"):
    """Topology with explicit link delays (ms); coordinates are placeholders."""
    nodes = tuple(Node(i, f"n{i}", 0.0, 0.0) for i in range(n))
    links = tuple(Link((a, b), d * 200.0, d, f"L{i}") for i, (a, b, d) in enumerate(edges))
    return Topology(nodes, links, name)


def delay_matrix(rows):
    return DelayMatrix(np.array(rows, dtype=float))


def request(rid, node, vtype=1, rate=100.0, max_delay=3.0):
    return ServiceRequest(rid, vtype, node, rate, max_delay)


@pytest.fixture(scope="session")
def germany50():
    return load_topology()


@pytest.fixture(scope="session")
def g50_delays(germany50):
    return all_pairs_delay(germany50)


_G50 = {}


def g50():
    if not _G50:
        t = load_topology()
        d = all_pairs_delay(t)
        _G50.update(topology=t, delays=d, cc_sites=select_sites_cc(d, 2.0).sites)
    return _G50


def tiny_instance(seed, max_requests=10, servers_per_site=2, cost_model=CostModel()):
    """2-3 sites drawn from the germany50 2 ms CC siting, 4..max_requests requests of the default service types."""
    g = g50()
    rng = np.random.default_rng(10_000 + seed)
    k = int(rng.integers(2, 4))
    sites = [int(s) for s in rng.choice(g["cc_sites"], size=k, replace=False)]
    count = int(rng.integers(4, max_requests + 1))
    reqs = generate_requests(count, g["topology"].n, seed)
    return Instance(reqs, g["delays"], sites, ResourceSpec(servers_per_site=servers_per_site), cost_model)


def oracle_instance(seed):
    """Instances small enough for naive enumeration: at most 6 requests and few hosts."""
    g = g50()
    rng = np.random.default_rng(20_000 + seed)
    shapes = [(1, 2), (1, 3), (2, 1), (3, 1), (2, 2)]
    n_sites, per_site = shapes[int(rng.integers(len(shapes)))]
    top = 4 if (n_sites, per_site) == (2, 2) else 6
    sites = [int(s) for s in rng.choice(g["cc_sites"], size=n_sites, replace=False)]
    count = int(rng.integers(1, top + 1))
    reqs = generate_requests(count, g["topology"].n, 30_000 + seed)
    return Instance(reqs, g["delays"], sites, ResourceSpec(servers_per_site=per_site))


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
