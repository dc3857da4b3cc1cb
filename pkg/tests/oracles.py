"""Independent reference computations used by the tests."""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import linprog

from gridplan.benders import _monotone_pairs
from gridplan.formulation import apply_failure_scenario, build_model
from gridplan.solver import LpProblem


def highs(problem: LpProblem):
    """Solve with scipy's HiGHS; returns (status, objective, x)."""
    A, b = problem.A, problem.b
    ub_rows, ub_rhs, eq_rows, eq_rhs = [], [], [], []
    for r, s in enumerate(problem.senses):
        if s == "=":
            eq_rows.append(A[r])
            eq_rhs.append(b[r])
        elif s == "<=":
            ub_rows.append(A[r])
            ub_rhs.append(b[r])
        else:
            ub_rows.append(-A[r])
            ub_rhs.append(-b[r])
    sign = -1.0 if problem.maximize else 1.0
    bounds = [
        (None if np.isinf(lo) else lo, None if np.isinf(hi) else hi) for lo, hi in zip(problem.lb, problem.ub)
    ]
    res = linprog(
        sign * problem.c,
        A_ub=np.array(ub_rows) if ub_rows else None,
        b_ub=ub_rhs or None,
        A_eq=np.array(eq_rows) if eq_rows else None,
        b_eq=eq_rhs or None,
        bounds=bounds,
        method="highs",
    )
    status = {0: "optimal", 2: "infeasible", 3: "unbounded"}.get(res.status, f"error{res.status}")
    obj = sign * res.fun if res.status == 0 else np.nan
    return status, obj, res.x


def vertex_oracle(c, A, b, senses, maximize=False, tol=1e-9):
    """Status and objective of an LP over x >= 0 by enumerating basic solutions.

    Feasible iff a basic feasible solution exists (the region is pointed).
    Unbounded iff the recession cone, cut by sum(d) <= 1, has a vertex with
    an improving objective.
    """
    c = np.asarray(c, float)
    A = np.asarray(A, float).reshape(-1, c.size)
    b = np.asarray(b, float)
    n = c.size
    sign = -1.0 if maximize else 1.0

    def best_vertex(G, h, sense, cost):
        # rows G x (sense) h together with x >= 0; returns min cost over vertices or None
        m = G.shape[0]
        H = np.vstack([G, np.eye(n)])
        rhs = np.concatenate([h, np.zeros(n)])
        eq = [k for k in range(m) if sense[k] == "="]
        others = [k for k in range(m + n) if k not in eq]
        if len(eq) > n:
            subsets = []
        else:
            subsets = [tuple(eq) + s for s in itertools.combinations(others, n - len(eq))]
        if not subsets:
            return None
        idx = np.array(subsets)
        M = H[idx]
        r = rhs[idx]
        det = np.linalg.det(M)
        ok = np.abs(det) > 1e-9
        if not ok.any():
            return None
        xs = np.linalg.solve(M[ok], r[ok][..., None])[..., 0]
        lhs = xs @ G.T
        feas = np.all(xs >= -tol, axis=1)
        for k in range(m):
            if sense[k] == "<=":
                feas &= lhs[:, k] <= h[k] + tol * max(1, abs(h[k]))
            elif sense[k] == ">=":
                feas &= lhs[:, k] >= h[k] - tol * max(1, abs(h[k]))
            else:
                feas &= np.abs(lhs[:, k] - h[k]) <= tol * max(1, abs(h[k]))
        if not feas.any():
            return None
        return float((xs[feas] @ cost).min())

    best = best_vertex(A, b, list(senses), sign * c)
    if best is None:
        return "infeasible", np.nan
    G = np.vstack([A, np.ones((1, n))])
    h = np.concatenate([np.zeros(A.shape[0]), [1.0]])
    ray = best_vertex(G, h, list(senses) + ["<="], sign * c)
    if ray is not None and ray < -1e-9:
        return "unbounded", np.nan
    return "optimal", sign * best


def enumerate_plans(system, reps, failures=()):
    """Exhaustive minimum over build vectors of the worst-scenario total cost.

    Each build vector is evaluated by one LP per scenario with the binaries
    fixed; returns (cost, y) or (inf, None) when no build is feasible.
    """
    base = build_model(system, reps)
    models = [base] + [apply_failure_scenario(base, f) for f in failures]
    ny = base.binary_columns().size
    pairs = _monotone_pairs(base)
    best, best_y = np.inf, None
    for bits in itertools.product((0.0, 1.0), repeat=ny):
        y = np.array(bits)
        if any(y[a] < y[b] for a, b in pairs):
            continue
        worst = -np.inf
        for m in models:
            status, obj, _ = highs(m.to_lp(y))
            if status == "infeasible":
                worst = np.inf
                break
            assert status == "optimal", status
            worst = max(worst, obj + m.constant)
        if worst < best:
            best, best_y = worst, y
    return best, best_y


def random_failures(system, seed: int, max_sets: int = 2):
    """0 to ``max_sets`` random outage sets drawn from the hurricane-zone lines."""
    rng = np.random.default_rng(1000 + seed)
    zone = [ln.id for ln in system.lines if ln.in_hurricane_zone]
    out = []
    for _ in range(int(rng.integers(0, max_sets + 1))):
        if zone:
            k = int(rng.integers(1, len(zone) + 1))
            out.append(frozenset(int(v) for v in rng.choice(zone, k, replace=False)))
    return out
