"""Transit and peering feasibility models with exact and time-limited solvers."""

from .model import (
    DEFAULT_BIG_M,
    Constraint,
    IlpModel,
    Sense,
    affected_ases,
    build_peering_model,
    build_transit_model,
)
from .solve import DEFAULT_TIME_LIMIT, IlpSolution, Status, branch_and_bound_solve, brute_force_solve
from .sweep import parse_sweep, refine_sweep, run_sweep, solve_point, write_sweep_csv

__all__ = [
    "DEFAULT_BIG_M",
    "DEFAULT_TIME_LIMIT",
    "Constraint",
    "IlpModel",
    "IlpSolution",
    "Sense",
    "Status",
    "affected_ases",
    "branch_and_bound_solve",
    "brute_force_solve",
    "build_peering_model",
    "build_transit_model",
    "parse_sweep",
    "refine_sweep",
    "run_sweep",
    "solve_point",
    "write_sweep_csv",
]
