from .exact import ExactLimits, solve_exact
from .heuristics import sa_initial_solution, solve_baseline, solve_greedy
from .sa import SaParams, sa_neighbor, solve_sa
from .state import PlacementState, SolveReport

SOLVERS = ("exact", "sa", "greedy", "baseline")


def run_solver(name: str, instance, sa_params: SaParams | None = None, limits: ExactLimits | None = None) -> SolveReport:
    if name == "exact":
        return solve_exact(instance, limits or ExactLimits())
    if name == "sa":
        return solve_sa(instance, sa_params or SaParams())
    if name == "greedy":
        return solve_greedy(instance)
    if name == "baseline":
        return solve_baseline(instance)
    raise ValueError(f"unknown solver {name!r}")


__all__ = [
    "SOLVERS",
    "ExactLimits",
    "PlacementState",
    "SaParams",
    "SolveReport",
    "run_solver",
    "sa_initial_solution",
    "sa_neighbor",
    "solve_baseline",
    "solve_exact",
    "solve_greedy",
    "solve_sa",
]
