import pytest

from mecplace import Instance, ResourceSpec, Slot, Solution
from mecplace.errors import UnresolvedReferenceError
from mecplace.solvers import SOLVERS, SaParams, run_solver
from mecplace.survivability import (
    SERVER,
    VNF_INSTANCE,
    enumerate_single_failures,
    make_scenario,
    rows_to_csv,
    survival_table,
    survives,
)

from conftest import delay_matrix, request, tiny_instance

P, B = "primary", "backup"
D = delay_matrix([[0.0, 1.0], [1.0, 0.0]])


def instance(reqs, servers=3):
    return Instance(reqs, D, [0], ResourceSpec(servers_per_site=servers))


def one_pair(servers=3):
    r = request(0, node=1)
    inst = instance([r], servers)
    sol = Solution.from_assignments({0: (Slot(0, 0, 1, P), Slot(0, 1, 1, B))}, [r], inst.resources)
    return inst, sol


def test_primary_server_failure_survives():
    inst, sol = one_pair()
    f = make_scenario(sol, SERVER, (0, 0))
    assert f.affected_requests == (0,)
    assert survives(sol, f, inst) == {0: True}


def test_both_servers_failing_loses_request():
    inst, sol = one_pair()
    both = [make_scenario(sol, SERVER, (0, 0)), make_scenario(sol, SERVER, (0, 1))]
    assert survives(sol, both, inst) == {0: False}


def test_backup_only_server_affects_nobody():
    inst, sol = one_pair()
    f = make_scenario(sol, SERVER, (0, 1))
    assert f.affected_requests == ()
    assert survives(sol, f, inst) == {}


def test_empty_solution_has_no_scenarios():
    assert enumerate_single_failures(Solution()) == []
    assert survival_table(Solution(), instance([])) == []


def test_scenario_count_is_servers_plus_slots():
    inst, sol = one_pair()
    scenarios = enumerate_single_failures(sol)
    assert [s.kind for s in scenarios] == [SERVER, SERVER, VNF_INSTANCE, VNF_INSTANCE]
    assert all(all(survives(sol, s, inst).values()) for s in scenarios)


def test_backup_that_cannot_meet_delay_fails():
    # the backup site is 3 ms away and the request allows 2 ms
    r = request(0, node=2, max_delay=2.0)
    d = delay_matrix([[0, 2, 1], [2, 0, 3], [1, 3, 0]])
    inst = Instance([r], d, [0, 1], ResourceSpec(servers_per_site=1))
    sol = Solution.from_assignments({0: (Slot(0, 0, 1, P), Slot(1, 0, 1, B))}, [r], inst.resources)
    assert survives(sol, make_scenario(sol, SERVER, (0, 0)), inst) == {0: False}


def test_overloaded_backup_fails():
    reqs = [request(i, node=1, rate=600.0) for i in range(2)]
    inst = instance(reqs)
    sol = Solution._build(
        {Slot(0, 0, 1, P): 2, Slot(0, 1, 1, B): 1},
        {i: (Slot(0, 0, 1, P), Slot(0, 1, 1, B)) for i in range(2)},
    )
    assert survives(sol, make_scenario(sol, SERVER, (0, 0)), inst) == {0: False, 1: False}


@pytest.mark.parametrize(
    "kind, target",
    [(SERVER, (0, 2)), (SERVER, (5, 0)), (VNF_INSTANCE, (0, 0, 3, P)), (VNF_INSTANCE, (0, 1, 1, P))],
)
def test_unknown_targets_raise(kind, target):
    _, sol = one_pair()
    with pytest.raises(UnresolvedReferenceError):
        make_scenario(sol, kind, target)


def test_unknown_kind_raises():
    _, sol = one_pair()
    with pytest.raises(ValueError):
        make_scenario(sol, "site", (0,))


def test_survival_table_csv():
    inst, sol = one_pair()
    rows = survival_table(sol, inst)
    text = rows_to_csv(rows)
    assert text.splitlines()[0] == "scenario,kind,affected,survived,ok"
    assert len(text.splitlines()) == 5
    assert rows[0] == {"scenario": "server:0/0", "kind": SERVER, "affected": 1, "survived": 1, "ok": True}


@pytest.mark.parametrize("name", SOLVERS)
def test_solver_outputs_survive_every_single_failure(name):
    for seed in range(8):
        inst = tiny_instance(seed)
        rep = run_solver(name, inst, SaParams(seed=seed, t0=10, t_min=1))
        rows = survival_table(rep.solution, inst)
        assert len(rows) == len(rep.solution.active_servers) + len(rep.solution.vnf_instances)
        assert all(r["ok"] for r in rows)
