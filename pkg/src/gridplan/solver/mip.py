"""Best-bound branch-and-bound over binary variables."""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .lp import DEFAULT_TOL, INFEASIBLE, OPTIMAL, UNBOUNDED, LpError, LpProblem, Tolerances, solve_lp


@dataclass
class MipSolution:
    status: str
    x: np.ndarray | None = None
    objective: float = float("nan")
    nodes: int = 0
    bound: float = float("nan")


def solve_mip(
    problem: LpProblem,
    binaries: Sequence[int],
    tol: Tolerances = DEFAULT_TOL,
    max_nodes: int = 100_000,
) -> MipSolution:
    """Minimise (or maximise) with the listed columns restricted to {0, 1}.

    Nodes are explored in best-bound order; the branching variable is the
    most fractional binary, ties going to the lowest index.
    """
    binaries = np.asarray(sorted(set(int(j) for j in binaries)), dtype=int)
    sign = -1.0 if problem.maximize else 1.0
    lb0 = problem.lb.copy()
    ub0 = problem.ub.copy()
    if binaries.size:
        if np.any(lb0[binaries] < -tol.integrality) or np.any(ub0[binaries] > 1 + tol.integrality):
            raise LpError("binary variables must be bounded within [0, 1]")
        lb0[binaries] = np.maximum(lb0[binaries], 0.0)
        ub0[binaries] = np.minimum(ub0[binaries], 1.0)

    def relax(lb: np.ndarray, ub: np.ndarray):
        sub = LpProblem(problem.c, problem.A, problem.b, problem.senses, lb, ub, problem.maximize)
        return solve_lp(sub, tol)

    root = relax(lb0, ub0)
    nodes = 1
    if root.status == INFEASIBLE:
        return MipSolution(INFEASIBLE, nodes=nodes)
    if root.status == UNBOUNDED:
        return MipSolution(UNBOUNDED, nodes=nodes)

    incumbent: np.ndarray | None = None
    best = np.inf  # in minimisation sense
    counter = 0
    heap: list = [(sign * root.objective, counter, lb0, ub0, root.x)]
    bound = sign * root.objective
    while heap:
        key, _, lb, ub, x = heapq.heappop(heap)
        bound = key
        if key >= best - _gap(best):
            break
        frac = np.abs(x[binaries] - np.round(x[binaries])) if binaries.size else np.zeros(0)
        if not np.any(frac > tol.integrality):
            incumbent = x.copy()
            incumbent[binaries] = np.round(incumbent[binaries])
            best = key
            continue
        score = np.abs(x[binaries] - 0.5)
        j = int(binaries[np.argmin(score)])  # argmin returns the lowest index among ties
        for value in (0.0, 1.0):
            clb, cub = lb.copy(), ub.copy()
            clb[j] = cub[j] = value
            if nodes >= max_nodes:
                raise LpError("branch-and-bound node limit reached")
            child = relax(clb, cub)
            nodes += 1
            if child.status != OPTIMAL:
                continue
            ckey = sign * child.objective
            if ckey < best - _gap(best):
                counter += 1
                heapq.heappush(heap, (ckey, counter, clb, cub, child.x))
    if incumbent is None:
        return MipSolution(INFEASIBLE, nodes=nodes)
    obj = float(problem.c @ incumbent)
    if not heap:
        bound = best
    return MipSolution(OPTIMAL, incumbent, obj, nodes, sign * min(bound, best))


def _gap(best: float) -> float:
    if not np.isfinite(best):
        return 0.0
    return 1e-9 * max(1.0, abs(best))
