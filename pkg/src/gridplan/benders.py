"""Benders decomposition of the co-planning MILP.

The master problem chooses the binaries Y (line builds, and commitment or
BES mode binaries when enabled). For a fixed Y each contingency scenario
(the intact grid plus every resilience contingency) gives a linear
subproblem over capacities and operation. Its dual

    max  F's + M'l + N'u + Y'pi
    s.t. H1'l + H2'u          <= I_S
         C's + J1'l + J2'u    <= I_W
         D's + K1'l + K2'u    <= O_C
         E's + L1'l + L2'u     = 0
         pi = -(G1'l + G2'u),  u >= 0

is solved explicitly. A bounded dual yields an optimality cut
eta >= F's + M'l + N'u + pi'Y; an unbounded one (infeasible operation)
yields a feasibility cut from a ray of the homogeneous dual.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .clustering import RepresentativeSet
from .formulation import (
    COMPONENTS,
    SHED_LIMIT_FAMILIES,
    CompactBlocks,
    MilpModel,
    apply_failure_scenario,
    build_model,
    partition_compact,
)
from .hurricane import FailureScenario, HurricaneModel, rank_contingencies
from .solver import INFEASIBLE, OPTIMAL, UNBOUNDED, LpError, LpProblem, solve_lp, solve_mip
from .system import PowerSystem

STANDARD = "standard"
RESILIENCE = "resilience"

CONVERGED = "converged"
ITERATION_LIMIT = "iteration_limit"
PLAN_INFEASIBLE = "infeasible"


class BendersError(RuntimeError):
    pass


@dataclass
class DualSolution:
    sigma: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    pi: np.ndarray
    objective: float  # F's + M'l + N'u + Y'pi, inf when unbounded
    bounded: bool
    constant: float  # F's + M'l + N'u
    primal: np.ndarray | None = None  # full column vector of the operating solution
    shed: float = 0.0  # rho-weighted load shed, MWh

    def cut(self) -> tuple[float, np.ndarray]:
        return self.constant, self.pi


def _dual_problem(blocks: CompactBlocks, ybar: np.ndarray, homogeneous: bool) -> tuple[LpProblem, tuple[int, int, int]]:
    A, rhs = blocks.A, blocks.rhs
    m_bal, m_eq, m_in = rhs["bal"].size, rhs["eq"].size, rhs["ineq"].size
    obj = np.concatenate(
        [rhs["bal"], rhs["eq"] - A["eq"]["Y"] @ ybar, rhs["ineq"] - A["ineq"]["Y"] @ ybar]
    )
    rows, b, senses = [], [], []
    for cls in ("S", "W", "P", "Q"):
        block = np.hstack([A["bal"][cls].T, A["eq"][cls].T, A["ineq"][cls].T])
        if block.shape[0] == 0:
            continue
        rows.append(block)
        b.append(np.zeros(block.shape[0]) if homogeneous or cls == "Q" else blocks.cost[cls])
        senses += ["=" if cls == "Q" else "<="] * block.shape[0]
    n = m_bal + m_eq + m_in
    mat = np.vstack(rows) if rows else np.zeros((0, n))
    lb = np.concatenate([np.full(m_bal + m_eq, -np.inf), np.zeros(m_in)])
    ub = np.full(n, np.inf)
    if homogeneous:
        # normalisation box; any feasible point of the cone is a ray
        lb[: m_bal + m_eq] = -1.0
        ub[:] = 1.0
    prob = LpProblem(obj, mat, np.concatenate(b) if b else np.zeros(0), senses, lb, ub, maximize=True)
    return prob, (m_bal, m_eq, m_in)


def _split(blocks: CompactBlocks, vec: np.ndarray, sizes: tuple[int, int, int]) -> tuple[np.ndarray, ...]:
    a, b, _ = sizes
    sigma, lam, mu = vec[:a], vec[a : a + b], vec[a + b :]
    pi = -(blocks.A["eq"]["Y"].T @ lam + blocks.A["ineq"]["Y"].T @ mu)
    return sigma, lam, mu, pi


def _constant(blocks: CompactBlocks, sigma, lam, mu) -> float:
    return float(blocks.rhs["bal"] @ sigma + blocks.rhs["eq"] @ lam + blocks.rhs["ineq"] @ mu)


def resilience_view(model: MilpModel) -> MilpModel:
    """The model with its hourly and annual shedding limits removed."""
    return replace(model, rows=[r for r in model.rows if r.family not in SHED_LIMIT_FAMILIES])


def weighted_shed(model: MilpModel, x: np.ndarray) -> float:
    rho = model.reps.weight
    return float(sum(x[j] * rho[idx[2] - 1] for j, idx in model.space.of_symbol("LS")))


def weighted_curtailment(model: MilpModel, x: np.ndarray) -> float:
    rho = model.reps.weight
    return float(sum(x[j] * rho[idx[2] - 1] for j, idx in model.space.of_symbol("PC")))


def solve_dsp(blocks: CompactBlocks, ybar: Sequence[float], mode: str = STANDARD) -> DualSolution:
    """Dual subproblem at fixed binaries.

    ``mode="resilience"`` expects blocks built from :func:`resilience_view`
    (or builds them here from the underlying model) so shedding is bounded
    only by demand.
    """
    if mode not in (STANDARD, RESILIENCE):
        raise ValueError(f"unknown subproblem mode {mode!r}")
    if mode == RESILIENCE and any(f in SHED_LIMIT_FAMILIES for f in blocks.families("ineq")):
        blocks = partition_compact(resilience_view(blocks.model))
    ybar = np.asarray(ybar, dtype=float)
    prob, sizes = _dual_problem(blocks, ybar, homogeneous=False)
    sol = solve_lp(prob)
    if sol.status == UNBOUNDED:
        sigma, lam, mu, pi = _split(blocks, sol.ray, sizes)
        return DualSolution(sigma, lam, mu, pi, np.inf, False, _constant(blocks, sigma, lam, mu))
    if sol.status != OPTIMAL:
        # zero is always dual feasible because every cost is nonnegative
        raise BendersError(f"dual subproblem returned status {sol.status}")
    sigma, lam, mu, pi = _split(blocks, sol.x, sizes)
    const = _constant(blocks, sigma, lam, mu)
    x = np.zeros(blocks.model.n)
    x[blocks.cols["Y"]] = ybar
    k = 0
    for cls in ("S", "W", "P", "Q"):
        cols = blocks.cols[cls]
        x[cols] = sol.duals[k : k + cols.size]
        k += cols.size
    return DualSolution(
        sigma, lam, mu, pi, float(sol.objective), True, const, x, weighted_shed(blocks.model, x)
    )


def solve_mdsp(blocks: CompactBlocks, ybar: Sequence[float], tol: float = 1e-9) -> DualSolution:
    """Homogeneous dual over the unit box; returns a direction with positive objective."""
    ybar = np.asarray(ybar, dtype=float)
    prob, sizes = _dual_problem(blocks, ybar, homogeneous=True)
    sol = solve_lp(prob)
    if sol.status == UNBOUNDED:
        vec = sol.ray
    elif sol.status == OPTIMAL and sol.objective > tol:
        vec = sol.x
    else:
        raise BendersError("modified dual subproblem has no improving ray: the subproblem is feasible at this Y")
    sigma, lam, mu, pi = _split(blocks, vec, sizes)
    const = _constant(blocks, sigma, lam, mu)
    return DualSolution(sigma, lam, mu, pi, const + float(pi @ ybar), False, const)


def compute_upper_bound(duals: Sequence[DualSolution], ybar: Sequence[float], invest: np.ndarray, constant: float = 0.0) -> float:
    if any(not d.bounded for d in duals):
        raise BendersError("upper bound needs every subproblem bounded")
    worst = max((d.objective for d in duals), default=0.0)
    return float(invest @ np.asarray(ybar, dtype=float)) + constant + worst


@dataclass(frozen=True)
class Cut:
    kind: str  # "opt" or "feas"
    constant: float
    coeffs: np.ndarray
    scenario: str
    iteration: int

    def value(self, y: np.ndarray) -> float:
        return self.constant + float(self.coeffs @ y)

    def holds(self, y: np.ndarray, eta: float, tol: float = 1e-6) -> bool:
        v = self.value(y)
        scale = max(1.0, abs(self.constant), float(np.abs(self.coeffs).sum()))
        if self.kind == "opt":
            return eta >= v - tol * scale
        return v <= tol * scale


@dataclass
class MasterState:
    invest: np.ndarray  # I_L
    constant: float
    monotone: list[tuple[int, int]]  # (later, earlier) column pairs with Y_later >= Y_earlier
    ybar: np.ndarray
    cuts: list[Cut] = field(default_factory=list)
    lb_history: list[float] = field(default_factory=list)
    iteration: int = 0

    @property
    def n_opt(self) -> int:
        return sum(c.kind == "opt" for c in self.cuts)

    @property
    def n_feas(self) -> int:
        return sum(c.kind == "feas" for c in self.cuts)


def solve_master(state: MasterState) -> tuple[np.ndarray, float] | None:
    """Minimise I_L'Y + eta over the cuts; None when no build plan satisfies them."""
    ny = state.invest.size
    c = np.append(state.invest, 1.0)
    rows, b, senses = [], [], []
    for cut in state.cuts:
        # opt: const + coeffs'Y <= eta;  feas: const + coeffs'Y <= 0
        r = np.zeros(ny + 1)
        r[:ny] = cut.coeffs
        r[ny] = -1.0 if cut.kind == "opt" else 0.0
        rows.append(r)
        b.append(-cut.constant)
        senses.append("<=")
    for later, earlier in state.monotone:
        r = np.zeros(ny + 1)
        r[later], r[earlier] = 1.0, -1.0
        rows.append(r)
        b.append(0.0)
        senses.append(">=")
    lb = np.zeros(ny + 1)
    ub = np.append(np.ones(ny), np.inf)
    prob = LpProblem(c, np.array(rows).reshape(-1, ny + 1), b, senses, lb, ub)
    sol = solve_mip(prob, range(ny))
    if sol.status == INFEASIBLE:
        return None
    if sol.status != OPTIMAL:
        raise BendersError(f"master problem returned {sol.status}")
    y = np.round(sol.x[:ny])
    return y, float(sol.objective) + state.constant


@dataclass
class PlanScenario:
    name: str
    failed: frozenset
    rri: float = 0.0
    speed: float | None = None
    probability: float = 1.0
    shed: float = 0.0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "failed_lines": sorted(self.failed),
            "rri": self.rri,
            "speed": self.speed,
            "probability": self.probability,
            "shed_mwh": self.shed,
        }


def scenario_name(failed: Iterable[int]) -> str:
    failed = sorted(failed)
    return "intact" if not failed else "rc[" + ",".join(str(l) for l in failed) + "]"


@dataclass
class IterationRecord:
    iteration: int
    lb: float
    ub: float
    gap: float
    n_opt_cuts: int
    n_feas_cuts: int
    worst_scenario: str


@dataclass
class PlanSolution:
    status: str
    y: np.ndarray
    x: np.ndarray | None  # operating solution of the binding scenario
    lb: float
    ub: float
    gap: float
    costs: dict
    total_shed: float
    total_curtailment: float
    iterations: list[IterationRecord]
    scenarios: list[PlanScenario]
    cuts: list[Cut]
    model: MilpModel
    binding_scenario: str = "intact"
    warnings: list[str] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    @property
    def tpc(self) -> float:
        return self.ub

    def built(self) -> list[tuple[int, int, int, str]]:
        """(stage, line id, corridor, kind) for every Y/Yd equal to one."""
        sp = self.model.space
        out = []
        for k, j in enumerate(self.model.binary_columns()):
            sym = sp.symbols[j]
            if sym in ("Y", "Yd") and self.y[k] > 0.5:
                s, l, c = sp.indices[j]
                out.append((s, l, c, "ac" if sym == "Y" else "dc"))
        return out

    def built_lines(self) -> frozenset[int]:
        return frozenset(l for _, l, _, _ in self.built())


def gap_of(lb: float, ub: float) -> float:
    if not np.isfinite(ub):
        return np.inf
    if abs(ub) <= 1e-12:
        return max(0.0, ub - lb)
    return (ub - lb) / abs(ub)


def _threads(threads: int | None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("GRIDPLAN_THREADS", "")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        raise BendersError(f"GRIDPLAN_THREADS must be an integer, got {env!r}") from None


class _ScenarioCache:
    """Compact blocks per failure set, standard and resilience views."""

    def __init__(self, base: MilpModel):
        self.base = base
        self._std: dict[frozenset, CompactBlocks] = {}
        self._res: dict[frozenset, CompactBlocks] = {}

    def model(self, failed: frozenset) -> MilpModel:
        return apply_failure_scenario(self.base, failed) if failed else self.base

    def standard(self, failed: frozenset) -> CompactBlocks:
        if failed not in self._std:
            self._std[failed] = partition_compact(self.model(failed))
        return self._std[failed]

    def resilience(self, failed: frozenset) -> CompactBlocks:
        if failed not in self._res:
            self._res[failed] = partition_compact(resilience_view(self.model(failed)))
        return self._res[failed]


def _monotone_pairs(model: MilpModel) -> list[tuple[int, int]]:
    sp = model.space
    pos = {int(j): k for k, j in enumerate(model.binary_columns())}
    pairs = []
    for sym in ("Y", "Yd"):
        for j, (s, l, c) in sp.of_symbol(sym):
            if s > 1:
                pairs.append((pos[j], pos[sp[sym, s - 1, l, c]]))
    return pairs


def run_planning(
    system: PowerSystem,
    reps: RepresentativeSet,
    rc_source: HurricaneModel | Sequence[Iterable[int] | FailureScenario] | None = None,
    *,
    eps: float | None = None,
    max_iter: int = 200,
    multi_cut: bool = True,
    threads: int | None = None,
) -> PlanSolution:
    """Plan investments against the intact grid and the resilience contingencies.

    ``rc_source`` is None (no contingencies), a fixed list of failed-line
    sets, or a :class:`HurricaneModel` that re-derives contingencies from
    every new build decision.
    """
    eps = system.config.benders_eps if eps is None else eps
    if not eps > 0:
        raise ValueError("eps must be positive")
    base = build_model(system, reps)
    cache = _ScenarioCache(base)
    ycols = base.binary_columns()
    invest = base.cost[ycols]
    state = MasterState(invest, base.constant, _monotone_pairs(base), np.zeros(ycols.size))
    workers = _threads(threads)

    scenarios = [PlanScenario("intact", frozenset())]
    live = isinstance(rc_source, HurricaneModel)
    if rc_source is not None and not live:
        for item in rc_source:
            if isinstance(item, FailureScenario):
                sc = PlanScenario(scenario_name(item.failed), item.failed, probability=item.probability,
                                  speed=item.speed.speed if item.speed else None)  # fmt: skip
            else:
                failed = frozenset(int(l) for l in item)
                sc = PlanScenario(scenario_name(failed), failed)
            if sc.failed and all(s.failed != sc.failed for s in scenarios):
                scenarios.append(sc)
    refreshed: set[frozenset] = set()

    def refresh(y: np.ndarray) -> bool:
        """Add contingencies selected for the build ``y``; True if the pool grew."""
        built = _built_lines(base, y)
        if built in refreshed:
            return False
        refreshed.add(built)
        candidates = [sc for sc in rc_source.probable_scenarios(system, built) if sc.failed]
        if not candidates:
            return False

        def shed_of(sc: FailureScenario) -> float:
            d = solve_dsp(cache.resilience(sc.failed), y, RESILIENCE)
            return d.shed if d.bounded else 0.0

        with ThreadPoolExecutor(workers) as pool:
            sheds = list(pool.map(shed_of, candidates))
        lookup = {id(sc): v for sc, v in zip(candidates, sheds)}
        ranked = rank_contingencies(candidates, lambda sc: lookup[id(sc)])
        grew = False
        for rc in ranked:
            if rc.selected and all(s.failed != rc.scenario.failed for s in scenarios):
                sp = rc.scenario.speed
                scenarios.append(
                    PlanScenario(
                        scenario_name(rc.scenario.failed), rc.scenario.failed, rc.rri,
                        sp.speed if sp else None, rc.scenario.probability, rc.shed,
                    )
                )  # fmt: skip
                grew = True
        return grew

    best_ub, best_y, best_duals, best_idx = np.inf, None, None, 0
    records: list[IterationRecord] = []
    lb = -np.inf
    status = ITERATION_LIMIT
    ybar = state.ybar
    warnings = list(base.warnings)

    for it in range(1, max_iter + 1):
        state.iteration = it
        if live and refresh(ybar):
            best_ub, best_y, best_duals = np.inf, None, None  # earlier bounds ignored the new contingencies

        def evaluate(sc: PlanScenario) -> DualSolution:
            return solve_dsp(cache.standard(sc.failed), ybar, STANDARD)

        with ThreadPoolExecutor(workers) as pool:
            duals = list(pool.map(evaluate, scenarios))

        infeasible = [k for k, d in enumerate(duals) if not d.bounded]
        new_cuts: list[Cut] = []
        if infeasible:
            for k in infeasible:
                ray = solve_mdsp(cache.standard(scenarios[k].failed), ybar)
                new_cuts.append(Cut("feas", ray.constant, ray.pi, scenarios[k].name, it))
            worst = scenarios[infeasible[0]].name
        else:
            ub_here = compute_upper_bound(duals, ybar, invest, base.constant)
            k_worst = int(np.argmax([d.objective for d in duals]))
            worst = scenarios[k_worst].name
            if ub_here < best_ub:
                best_ub, best_y, best_duals, best_idx = ub_here, ybar.copy(), duals, k_worst
        bounded = [k for k, d in enumerate(duals) if d.bounded]
        if bounded:
            chosen = bounded if multi_cut else [max(bounded, key=lambda k: duals[k].objective)]
            for k in chosen:
                new_cuts.append(Cut("opt", duals[k].constant, duals[k].pi, scenarios[k].name, it))
        state.cuts.extend(new_cuts)

        master = solve_master(state)
        if master is None:
            status = PLAN_INFEASIBLE
            records.append(IterationRecord(it, np.nan, best_ub, np.inf, state.n_opt, state.n_feas, worst))
            break
        ybar, lb = master
        state.ybar = ybar
        state.lb_history.append(lb)
        gap = gap_of(lb, best_ub)
        records.append(IterationRecord(it, lb, best_ub, gap, state.n_opt, state.n_feas, worst))
        if gap <= eps:
            status = CONVERGED
            break

    if best_y is None:
        return PlanSolution(
            status if status == PLAN_INFEASIBLE else ITERATION_LIMIT,
            state.ybar, None, lb, np.inf, np.inf, {}, 0.0, 0.0, records, scenarios, state.cuts, base,
            warnings=warnings,
        )  # fmt: skip

    x = best_duals[best_idx].primal
    comps = base.component_values(x)
    tic = comps["AL"] + comps["DL"] + comps["BE"] + comps["WF"]
    costs = {**comps, "TIC": tic, "TOC": comps["GF"] + comps["LWC"], "TPC": best_ub}
    intact = best_duals[0].primal
    return PlanSolution(
        status,
        best_y,
        x,
        lb,
        best_ub,
        gap_of(lb, best_ub),
        costs,
        weighted_shed(base, intact),
        weighted_curtailment(base, intact),
        records,
        scenarios,
        state.cuts,
        base,
        scenarios[best_idx].name,
        warnings,
    )


def _built_lines(model: MilpModel, y: np.ndarray) -> frozenset[int]:
    sp = model.space
    out = set()
    for k, j in enumerate(model.binary_columns()):
        if sp.symbols[j] in ("Y", "Yd") and y[k] > 0.5:
            out.add(sp.indices[j][1])
    return frozenset(out)


def evaluate_contingency_shed(
    system: PowerSystem, reps: RepresentativeSet, y: np.ndarray, failed: Iterable[int]
) -> float:
    """Load shed (MWh) of plan ``y`` under the given outage with shedding limits lifted."""
    model = build_model(system, reps)
    blocks = partition_compact(resilience_view(apply_failure_scenario(model, frozenset(failed))))
    d = solve_dsp(blocks, y, RESILIENCE)
    if not d.bounded:
        raise BendersError("operation infeasible even with unrestricted shedding")
    return d.shed


__all__ = [
    "COMPONENTS",
    "CONVERGED",
    "ITERATION_LIMIT",
    "PLAN_INFEASIBLE",
    "RESILIENCE",
    "STANDARD",
    "BendersError",
    "Cut",
    "DualSolution",
    "IterationRecord",
    "LpError",
    "MasterState",
    "PlanScenario",
    "PlanSolution",
    "compute_upper_bound",
    "evaluate_contingency_shed",
    "gap_of",
    "resilience_view",
    "run_planning",
    "scenario_name",
    "solve_dsp",
    "solve_master",
    "solve_mdsp",
]
