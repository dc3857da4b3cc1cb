"""Self-contained LP (simplex) and binary MIP (branch-and-bound) solvers."""

from .lp import (
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    LpError,
    LpProblem,
    LpSolution,
    Tolerances,
    solve_lp,
)
from .mip import MipSolution, solve_mip

__all__ = [
    "INFEASIBLE",
    "OPTIMAL",
    "UNBOUNDED",
    "LpError",
    "LpProblem",
    "LpSolution",
    "MipSolution",
    "Tolerances",
    "solve_lp",
    "solve_mip",
]
