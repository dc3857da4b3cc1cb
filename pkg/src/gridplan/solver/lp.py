"""Dense two-phase primal simplex.

Problems are given in general form

    min/max  c'x   s.t.  A_i x (<=, =, >=) b_i,   lb <= x <= ub

and converted to standard form (x >= 0, equality rows with slacks) before
the tableau is built. Pricing is Dantzig's most-negative reduced cost; after
a run of degenerate pivots the solver switches to Bland's smallest-index rule
until the objective moves again, which rules out cycling.

Duals are reported as the sensitivity of the stated objective to each
right-hand side. For infeasible problems ``farkas`` holds a certificate f
with f'A <= 0 (on nonnegative columns), f'b > 0; for unbounded problems
``ray`` holds an improving recession direction of x.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

SENSES = ("<=", "=", ">=")


class LpError(RuntimeError):
    """Malformed input or a numerical breakdown in the simplex."""


@dataclass
class Tolerances:
    feasibility: float = 1e-7
    optimality: float = 1e-7
    pivot: float = 1e-9
    integrality: float = 1e-6


DEFAULT_TOL = Tolerances()


@dataclass
class LpProblem:
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    senses: Sequence[str]
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None
    maximize: bool = False

    def __post_init__(self) -> None:
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n) if n else np.zeros((len(self.b), 0))
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.senses = tuple(self.senses)
        m = self.A.shape[0]
        if self.b.size != m or len(self.senses) != m:
            raise LpError(f"dimension mismatch: A has {m} rows, b {self.b.size}, senses {len(self.senses)}")
        if any(s not in SENSES for s in self.senses):
            raise LpError(f"unknown constraint sense in {set(self.senses) - set(SENSES)}")
        self.lb = np.zeros(n) if self.lb is None else np.asarray(self.lb, dtype=float).ravel()
        self.ub = np.full(n, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float).ravel()
        if self.lb.size != n or self.ub.size != n:
            raise LpError("bounds do not match the number of variables")
        for name in ("c", "A", "b"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise LpError(f"non-finite coefficient in {name}")
        if np.any(np.isnan(self.lb)) or np.any(np.isnan(self.ub)) or np.any(self.lb == np.inf) or np.any(
            self.ub == -np.inf
        ):
            raise LpError("invalid variable bounds")

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape


@dataclass
class LpSolution:
    status: str
    x: np.ndarray | None = None
    objective: float = float("nan")
    duals: np.ndarray | None = None
    ray: np.ndarray | None = None
    farkas: np.ndarray | None = None
    iterations: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


class _Tableau:
    def __init__(self, A: np.ndarray, b: np.ndarray, senses: Sequence[str], tol: Tolerances):
        m, n = A.shape
        self.tol = tol
        slack_sign = np.array([{"<=": 1.0, "=": 0.0, ">=": -1.0}[s] for s in senses])
        slack_rows = np.flatnonzero(slack_sign)
        n_slack = slack_rows.size
        flip = np.where(b < 0, -1.0, 1.0)
        # row keeps its slack as the starting basic column iff the slack coefficient is +1 after flipping
        own_basis = (slack_sign * flip) > 0
        art_rows = np.flatnonzero(~own_basis)
        n_art = art_rows.size
        ncol = n + n_slack + n_art
        T = np.zeros((m + 1, ncol + 1))
        T[:m, :n] = A * flip[:, None]
        T[slack_rows, n + np.arange(n_slack)] = slack_sign[slack_rows] * flip[slack_rows]
        T[art_rows, n + n_slack + np.arange(n_art)] = 1.0
        T[:m, -1] = b * flip
        basis = np.empty(m, dtype=int)
        slack_col = np.full(m, -1)
        slack_col[slack_rows] = n + np.arange(n_slack)
        basis[own_basis] = slack_col[own_basis]
        basis[art_rows] = n + n_slack + np.arange(n_art)
        self.T = T
        self.T0 = T[:m].copy()  # original rows, used to refactor
        self.m, self.n = m, n
        self.flip = flip
        self.basis = basis
        self.init_cols = basis.copy()
        self.art_start = n + n_slack
        self.ncol = ncol
        self.iterations = 0

    def set_objective(self, cost: np.ndarray) -> None:
        """Load full-length cost vector and price out the current basis."""
        T = self.T
        T[-1, :-1] = cost
        T[-1, -1] = 0.0
        cb = cost[self.basis]
        nz = np.flatnonzero(cb)
        if nz.size:
            T[-1] -= cb[nz] @ T[nz]
        self.cost = cost

    def refactor(self) -> bool:
        """Recompute the tableau rows from the original data; False if the basis is singular."""
        B = self.T0[:, self.basis]
        try:
            rows = np.linalg.solve(B, self.T0)
        except np.linalg.LinAlgError:
            return False
        if not np.all(np.isfinite(rows)):
            return False
        rows[np.abs(rows) < 1e-13] = 0.0
        rows[np.arange(self.m), self.basis] = 1.0
        self.T[: self.m] = rows
        self.set_objective(self.cost)
        return True

    def pivot(self, r: int, q: int) -> None:
        T = self.T
        T[r] /= T[r, q]
        col = T[:, q].copy()
        col[r] = 0.0
        nz = np.flatnonzero(col)
        if nz.size:
            T[nz] -= np.outer(col[nz], T[r])
        T[:, q] = 0.0
        T[r, q] = 1.0
        self.basis[r] = q
        self.iterations += 1

    def run(
        self, allowed: np.ndarray, max_iter: int, degenerate_switch: int = 30, refactor_every: int = 50
    ) -> tuple[str, int]:
        """Iterate to optimality over the ``allowed`` entering columns.

        Returns (status, column) where column is the unbounded entering column.
        A terminal status is only accepted on a freshly refactored tableau.
        """
        T, tol = self.T, self.tol
        m = self.m
        bland = False
        degenerate_run = 0
        start = self.iterations
        last_refactor = self.iterations
        while True:
            if self.iterations - start > max_iter:
                raise LpError("simplex iteration limit reached")
            if self.iterations - last_refactor >= refactor_every:
                self.refactor()
                last_refactor = self.iterations
            d = T[-1, :-1]
            cand = allowed & (d < -tol.optimality)
            if not cand.any():
                if self.iterations > last_refactor and self.refactor():
                    last_refactor = self.iterations
                    continue
                return OPTIMAL, -1
            if bland:
                q = int(np.argmax(cand))
            else:
                q = int(np.argmin(np.where(cand, d, np.inf)))
            colq = T[:m, q]
            pos = colq > tol.pivot
            if not pos.any():
                if self.iterations > last_refactor and self.refactor():
                    last_refactor = self.iterations
                    continue
                return UNBOUNDED, q
            rhs = np.maximum(T[:m, -1], 0.0)
            ratios = np.full(m, np.inf)
            ratios[pos] = rhs[pos] / colq[pos]
            best = ratios.min()
            if bland:
                ties = np.flatnonzero(ratios <= best + tol.pivot * max(1.0, best))
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                # two-pass ratio test: among rows within a small relaxation pick the largest pivot
                relaxed = np.full(m, np.inf)
                slack = 1e-9 * np.maximum(1.0, rhs[pos])
                relaxed[pos] = (rhs[pos] + slack) / colq[pos]
                ties = np.flatnonzero(ratios <= relaxed.min())
                r = int(ties[np.argmax(colq[ties])])
            if best <= tol.feasibility:
                degenerate_run += 1
                if degenerate_run > degenerate_switch:
                    bland = True
            else:
                degenerate_run = 0
                bland = False
            self.pivot(r, q)

    def duals(self) -> np.ndarray:
        """Multipliers y = c_B B^-1 of the standard-form rows."""
        return self.cost[self.init_cols] - self.T[-1, self.init_cols]

    def primal(self) -> np.ndarray:
        x = np.zeros(self.ncol)
        x[self.basis] = self.T[: self.m, -1]
        return x


class _StandardForm:
    """x = offset + M @ z with z >= 0, plus upper-bound rows on z."""

    def __init__(self, p: LpProblem):
        n = p.c.size
        cols: list[tuple[int, float]] = []  # (orig var, sign)
        offset = np.zeros(n)
        bound_rows: list[tuple[int, float]] = []  # (z col, bound)
        for j in range(n):
            lo, hi = p.lb[j], p.ub[j]
            if np.isfinite(lo):
                offset[j] = lo
                cols.append((j, 1.0))
                if np.isfinite(hi):
                    bound_rows.append((len(cols) - 1, hi - lo))
            elif np.isfinite(hi):
                offset[j] = hi
                cols.append((j, -1.0))
            else:
                cols.append((j, 1.0))
                cols.append((j, -1.0))
        nz = len(cols)
        M = np.zeros((n, nz))
        for k, (j, sgn) in enumerate(cols):
            M[j, k] = sgn
        self.M = M
        self.offset = offset
        A = p.A @ M
        b = p.b - p.A @ offset
        senses = list(p.senses)
        if bound_rows:
            extra = np.zeros((len(bound_rows), nz))
            for r, (k, val) in enumerate(bound_rows):
                extra[r, k] = 1.0
            A = np.vstack([A, extra])
            b = np.concatenate([b, [val for _, val in bound_rows]])
            senses += ["<="] * len(bound_rows)
        self.A, self.b, self.senses = A, b, senses
        self.sign = -1.0 if p.maximize else 1.0
        self.c = self.sign * (M.T @ p.c)
        self.m_orig = p.A.shape[0]


def solve_lp(problem: LpProblem, tol: Tolerances = DEFAULT_TOL, max_iter: int = 200_000) -> LpSolution:
    """Solve ``problem`` and return status, primal/dual values and certificates."""
    p = problem
    std = _StandardForm(p)
    tab = _Tableau(std.A, std.b, std.senses, tol)
    m = tab.m
    nz = std.A.shape[1]
    scale = max(1.0, float(np.abs(std.b).max(initial=0.0)))

    # phase 1
    cost1 = np.zeros(tab.ncol)
    cost1[tab.art_start :] = 1.0
    if tab.ncol > tab.art_start:
        tab.set_objective(cost1)
        allowed = np.ones(tab.ncol, dtype=bool)
        tab.run(allowed, max_iter)
        infeas = -tab.T[-1, -1]
        if infeas > tol.feasibility * scale:
            y = tab.duals()
            farkas = tab.flip[: std.m_orig] * y[: std.m_orig]
            return LpSolution(INFEASIBLE, farkas=farkas, iterations=tab.iterations)
        _drive_out_artificials(tab)

    # phase 2
    cost2 = np.zeros(tab.ncol)
    cost2[:nz] = std.c
    tab.set_objective(cost2)
    allowed = np.zeros(tab.ncol, dtype=bool)
    allowed[: tab.art_start] = True
    status, q = tab.run(allowed, max_iter)
    if status == UNBOUNDED:
        direction = np.zeros(tab.ncol)
        direction[q] = 1.0
        direction[tab.basis] -= tab.T[:m, q]
        ray = std.M @ direction[:nz]
        return LpSolution(UNBOUNDED, ray=ray, iterations=tab.iterations)
    z = tab.primal()[:nz]
    x = std.offset + std.M @ z
    y = tab.duals()
    duals = std.sign * tab.flip[: std.m_orig] * y[: std.m_orig]
    return LpSolution(
        OPTIMAL,
        x=x,
        objective=float(p.c @ x),
        duals=duals,
        iterations=tab.iterations,
        extra={"bound_duals": std.sign * y[std.m_orig :]},
    )


def _drive_out_artificials(tab: _Tableau) -> None:
    T = tab.T
    for r in range(tab.m):
        if tab.basis[r] < tab.art_start:
            continue
        row = T[r, : tab.art_start]
        cand = np.flatnonzero(np.abs(row) > 1e-7)
        if cand.size:
            tab.pivot(r, int(cand[np.argmax(np.abs(row[cand]))]))
        # otherwise the row is redundant; its artificial stays basic at zero
