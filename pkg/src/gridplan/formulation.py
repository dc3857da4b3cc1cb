"""MILP co-planning model and its compact decomposition blocks.

Every constraint row carries a short ``family`` tag ("2lo", "19", "26hi", ...)
shared by all rows built by the same rule. Column classes follow the compact form:

    Y  binaries       Y, Yd, U, I
    S  BES capacity   S, C
    W  WF capacity    Pw
    P  nonnegative operation variables
    Q  free operation variables  theta, Pl, Pe, Pv

Objective coefficients are in 10^6 $.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .clustering import RepresentativeSet
from .solver import LpProblem
from .system import PowerSystem, capital_recovery_factor

MILLION = 1e-6

SYMBOL_CLASS = {
    "Y": "Y", "Yd": "Y", "U": "Y", "I": "Y",
    "S": "S", "C": "S",
    "Pw": "W",
    "P": "P", "Ps": "P", "Pvp": "P", "Pvm": "P", "Delta": "P", "R": "P",
    "Pd": "P", "Pc": "P", "E": "P", "PC": "P", "LS": "P",
    "theta": "Q", "Pl": "Q", "Pe": "Q", "Pv": "Q",
}  # fmt: skip

INDEX_TAGS = {
    "Y": "slc", "Yd": "slc", "U": "sih", "I": "sgh",
    "S": "si", "C": "si", "Pw": "si",
    "P": "sgh", "Ps": "sghp", "R": "sgh", "LS": "sih", "PC": "sih",
    "E": "sih", "Pd": "sih", "Pc": "sih",
    "Pe": "slh", "Pl": "slch", "Pv": "svlh", "Pvp": "svlh", "Pvm": "svlh",
    "Delta": "nsvlh", "theta": "sih",
}  # fmt: skip

BALANCE_FAMILIES = frozenset({"35"})
EQUALITY_FAMILIES = frozenset({"3", "19", "24", "31", "32", "33", "ref"})
INEQUALITY_FAMILIES = frozenset(
    {
        "2lo", "2hi", "4", "5up", "5dn", "6", "7", "8", "9", "10", "11", "12", "13", "14",
        "15", "16", "17", "18", "20", "21", "22", "23", "25lo", "25hi", "26lo", "26hi",
        "27lo", "27hi", "30", "34lo", "34hi", "angle_lo", "angle_hi", "cap_mono",
    }
)  # fmt: skip
SHED_LIMIT_FAMILIES = frozenset({"10", "11"})
COMPONENTS = ("AL", "DL", "BE", "WF", "GF", "LWC")


class ModelError(ValueError):
    pass


def investment_discount(rate: float, stage: int) -> float:
    """Present-value weight of two years of annualised investment in ``stage``."""
    return 2.0 / (1.0 + rate) ** (2 * stage - 1)


def operating_discount(rate: float, stage: int) -> float:
    return 2.0 / (1.0 + rate) ** (2 * stage)


def pwl_slopes(p_max: float, blocks: int) -> np.ndarray:
    """Slopes (2n-1) * Pmax / N of the secant linearisation of P^2."""
    n = np.arange(1, blocks + 1)
    return (2 * n - 1) * p_max / blocks


def pwl_square(value: float, p_max: float, blocks: int) -> float:
    """In-order block filling of |value| and the resulting approximation of value^2."""
    width = p_max / blocks
    delta = np.clip(abs(value) - width * np.arange(blocks), 0.0, width)
    return float(pwl_slopes(p_max, blocks) @ delta)


def vsc_loss(p_abs: float, coeffs: Sequence[float], p_max: float, blocks: int) -> float:
    """Linearised converter loss: constant + linear + PWL quadratic term."""
    phi, psi, chi = coeffs
    return phi + psi * p_abs + chi * pwl_square(p_abs, p_max, blocks)


def big_m(base_power: float, susceptance: float, angle_bound: float) -> float:
    return base_power * susceptance * 2.0 * angle_bound


class VariableSpace:
    """Maps (symbol, index tuple) to a column number."""

    def __init__(self) -> None:
        self.symbols: list[str] = []
        self.indices: list[tuple] = []
        self.classes: list[str] = []
        self._lookup: dict[tuple, int] = {}

    def add(self, symbol: str, *index) -> int:
        if symbol not in SYMBOL_CLASS:
            raise ModelError(f"unknown variable symbol {symbol!r}")
        key = (symbol, *index)
        if key in self._lookup:
            raise ModelError(f"duplicate variable {key}")
        j = len(self.symbols)
        self._lookup[key] = j
        self.symbols.append(symbol)
        self.indices.append(tuple(index))
        self.classes.append(SYMBOL_CLASS[symbol])
        return j

    def __getitem__(self, key: tuple) -> int:
        return self._lookup[key]

    def get(self, symbol: str, *index) -> int | None:
        return self._lookup.get((symbol, *index))

    def __contains__(self, key: tuple) -> bool:
        return key in self._lookup

    def __len__(self) -> int:
        return len(self.symbols)

    def columns(self, cls: str) -> np.ndarray:
        return np.array([j for j, c in enumerate(self.classes) if c == cls], dtype=int)

    def of_symbol(self, symbol: str) -> list[tuple[int, tuple]]:
        return [(j, self.indices[j]) for j, s in enumerate(self.symbols) if s == symbol]

    def name(self, j: int) -> str:
        sym, idx = self.symbols[j], self.indices[j]
        tags = INDEX_TAGS[sym]
        return sym + "".join(f"_{t}{v}" for t, v in zip(tags, idx))


@dataclass(frozen=True)
class Row:
    family: str
    key: tuple
    coeffs: dict
    sense: str
    rhs: float
    line: int | None = None


@dataclass
class MilpModel:
    space: VariableSpace
    rows: list[Row]
    components: dict[str, np.ndarray]
    constants: dict[str, float]
    system: PowerSystem
    reps: RepresentativeSet
    failed: frozenset = frozenset()
    warnings: list[str] = field(default_factory=list)

    @property
    def cost(self) -> np.ndarray:
        return sum(self.components[c] for c in COMPONENTS)

    @property
    def constant(self) -> float:
        return float(sum(self.constants.values()))

    @property
    def n(self) -> int:
        return len(self.space)

    def binary_columns(self) -> np.ndarray:
        return self.space.columns("Y")

    def matrix(self, rows: Sequence[Row] | None = None) -> np.ndarray:
        rows = self.rows if rows is None else rows
        A = np.zeros((len(rows), self.n))
        for r, row in enumerate(rows):
            for j, v in row.coeffs.items():
                A[r, j] = v
        return A

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lb = np.zeros(self.n)
        ub = np.full(self.n, np.inf)
        q = self.space.columns("Q")
        lb[q] = -np.inf
        ub[self.binary_columns()] = 1.0
        return lb, ub

    def to_lp(self, fixed_y: np.ndarray | None = None) -> LpProblem:
        """LP relaxation; ``fixed_y`` pins the binary columns (in column order)."""
        lb, ub = self.bounds()
        if fixed_y is not None:
            ycols = self.binary_columns()
            lb[ycols] = ub[ycols] = np.asarray(fixed_y, dtype=float)
        return LpProblem(
            self.cost, self.matrix(), [r.rhs for r in self.rows], [r.sense for r in self.rows], lb, ub
        )

    def objective_value(self, x: np.ndarray) -> float:
        return float(self.cost @ x) + self.constant

    def component_values(self, x: np.ndarray) -> dict[str, float]:
        return {c: float(self.components[c] @ x) + self.constants.get(c, 0.0) for c in COMPONENTS}

    def rows_of(self, family: str) -> list[Row]:
        return [r for r in self.rows if r.family == family]

    def dump_lp(self) -> str:
        """CPLEX-LP style text of the model."""
        out = io.StringIO()
        names = [self.space.name(j) for j in range(self.n)]

        def expr(coeffs: dict) -> str:
            if not coeffs:
                return "0 " + names[0] if names else "0"
            return " ".join(f"{'+' if v >= 0 else '-'} {abs(v):.12g} {names[j]}" for j, v in sorted(coeffs.items()))

        out.write("\\ constant term: %.12g\nMinimize\n obj: " % self.constant)
        cost = self.cost
        out.write(expr({j: cost[j] for j in np.flatnonzero(cost)}) + "\nSubject To\n")
        for k, row in enumerate(self.rows):
            label = f"r{k}_{row.family}_" + "_".join(str(v) for v in row.key)
            out.write(f" {label}: {expr(row.coeffs)} {row.sense} {row.rhs:.12g}\n")
        out.write("Bounds\n")
        for j in self.space.columns("Q"):
            out.write(f" {names[j]} free\n")
        out.write("Binaries\n")
        for j in self.binary_columns():
            out.write(f" {names[j]}\n")
        out.write("End\n")
        return out.getvalue()


class _Builder:
    def __init__(self, system: PowerSystem, reps: RepresentativeSet):
        self.system = system
        self.cfg = system.config
        self.reps = reps
        self.space = VariableSpace()
        self.rows: list[Row] = []
        self.warnings: list[str] = []
        self.S = self.cfg.stages
        self.H = len(reps)
        self.stages = range(1, self.S + 1)
        self.hours = range(1, self.H + 1)

    def lf(self, h: int) -> float:
        return float(self.reps.load[h - 1])

    def wf(self, h: int) -> float:
        return float(self.reps.wind[h - 1])

    def rho(self, h: int) -> float:
        return float(self.reps.weight[h - 1])

    def growth(self, s: int) -> float:
        return 1.0 + self.cfg.load_growth[s - 1]

    def demand(self, s: int, bus, h: int) -> float:
        return self.growth(s) * self.lf(h) * bus.peak_load

    def annual_weight(self, h: int) -> float:
        return self.rho(h) if self.cfg.weighted_annual else 1.0

    def commit(self, s: int, g: int, h: int) -> int | None:
        """Column of I, or None when commitment is fixed on."""
        return self.space.get("I", s, g, h)

    def row(self, family: str, key: tuple, terms: Iterable[tuple[int | None, float]], sense: str, rhs: float, line=None):
        coeffs: dict[int, float] = {}
        for j, v in terms:
            if j is None:  # variable fixed at one
                rhs -= v
                continue
            coeffs[j] = coeffs.get(j, 0.0) + v
        coeffs = {j: v for j, v in coeffs.items() if v != 0.0}
        self.rows.append(Row(family, key, coeffs, sense, float(rhs), line))


def declare_variables(b: _Builder) -> None:
    sys, cfg, sp = b.system, b.cfg, b.space
    for s in b.stages:
        for ln in sys.ac_candidates:
            for c in range(1, ln.corridor_count + 1):
                sp.add("Y", s, ln.id, c)
        for ln in sys.dc_candidates:
            for c in range(1, ln.corridor_count + 1):
                sp.add("Yd", s, ln.id, c)
        for bus in sys.bes_buses:
            sp.add("S", s, bus.id)
            sp.add("C", s, bus.id)
        for bus in sys.wf_buses:
            sp.add("Pw", s, bus.id)
        for h in b.hours:
            for g in sys.generators:
                if cfg.unit_commitment:
                    sp.add("I", s, g.id, h)
                sp.add("P", s, g.id, h)
                for p in range(1, cfg.cost_segments + 1):
                    sp.add("Ps", s, g.id, h, p)
                sp.add("R", s, g.id, h)
            for bus in sys.buses:
                sp.add("theta", s, bus.id, h)
                sp.add("LS", s, bus.id, h)
            for bus in sys.wf_buses:
                sp.add("PC", s, bus.id, h)
            for bus in sys.bes_buses:
                sp.add("E", s, bus.id, h)
                sp.add("Pd", s, bus.id, h)
                sp.add("Pc", s, bus.id, h)
                if cfg.bes_binary:
                    sp.add("U", s, bus.id, h)
            for ln in sys.existing_lines:
                sp.add("Pe", s, ln.id, h)
            for ln in sys.ac_candidates:
                for c in range(1, ln.corridor_count + 1):
                    sp.add("Pl", s, ln.id, c, h)
            for k, ln in enumerate(sys.dc_candidates):
                for v in (2 * k + 1, 2 * k + 2):
                    for sym in ("Pv", "Pvp", "Pvm"):
                        sp.add(sym, s, v, ln.id, h)
                    for n in range(1, cfg.pwl_blocks + 1):
                        sp.add("Delta", n, s, v, ln.id, h)


def build_objective(b: _Builder) -> tuple[dict[str, np.ndarray], dict[str, float]]:
    sys, cfg, sp = b.system, b.cfg, b.space
    r = cfg.interest_rate
    crf = {k: capital_recovery_factor(r, cfg.lifetimes[k]) for k in ("line", "bes", "wf")}
    comp = {c: np.zeros(len(sp)) for c in COMPONENTS}
    const = {c: 0.0 for c in COMPONENTS}
    for s in b.stages:
        inv = investment_discount(r, s)
        op = operating_discount(r, s)
        for ln in sys.ac_candidates:
            for c in range(1, ln.corridor_count + 1):
                cost = ln.invest_cost * ln.length + ln.row_cost * ln.length
                if c == 1:
                    cost += ln.substation_cost
                comp["AL"][sp["Y", s, ln.id, c]] = inv * crf["line"] * cost
        for ln in sys.dc_candidates:
            for c in range(1, ln.corridor_count + 1):
                # two converters per HVDC line
                cost = (ln.invest_cost + ln.row_cost) * ln.length + 2 * ln.flow_max * ln.vsc_cost
                comp["DL"][sp["Yd", s, ln.id, c]] = inv * crf["line"] * cost
        for bus in sys.bes_buses:
            comp["BE"][sp["S", s, bus.id]] = inv * crf["bes"] * bus.bes_energy_cost * MILLION
            comp["BE"][sp["C", s, bus.id]] = inv * crf["bes"] * bus.bes_power_cost * MILLION
        for bus in sys.wf_buses:
            comp["WF"][sp["Pw", s, bus.id]] = inv * crf["wf"] * bus.wf_invest_cost
        for h in b.hours:
            w = op * b.rho(h) * MILLION
            for g in sys.generators:
                first = g.segment_costs[0]
                j = b.commit(s, g.id, h)
                if j is None:
                    const["GF"] += w * first * g.p_min
                else:
                    comp["GF"][j] = w * first * g.p_min
                comp["GF"][sp["R", s, g.id, h]] = w * cfg.reserve_cost_xi * first
                for p, cp in enumerate(g.segment_costs, start=1):
                    comp["GF"][sp["Ps", s, g.id, h, p]] = w * cp
            for bus in sys.buses:
                comp["LWC"][sp["LS", s, bus.id, h]] = w * bus.shed_cost
            for bus in sys.wf_buses:
                comp["LWC"][sp["PC", s, bus.id, h]] = w * bus.curtail_cost
    return comp, const


def reserve_cost_coefficient(first_segment_cost: float, xi: float) -> float:
    """Undiscounted reserve price in $/MWh."""
    return xi * first_segment_cost


def build_generator_constraints(b: _Builder) -> None:
    sys, cfg, sp = b.system, b.cfg, b.space
    for s in b.stages:
        for g in sys.generators:
            seg_cap = (g.p_max - g.p_min) / cfg.cost_segments
            for h in b.hours:
                P = sp["P", s, g.id, h]
                I = b.commit(s, g.id, h)
                key = (s, g.id, h)
                b.row("2lo", key, [(P, 1.0), (I, -g.p_min)], ">=", 0.0)
                b.row("2hi", key, [(P, 1.0), (I, -g.p_max)], "<=", 0.0)
                segs = [(sp["Ps", s, g.id, h, p], -1.0) for p in range(1, cfg.cost_segments + 1)]
                b.row("3", key, [(P, 1.0), (I, -g.p_min), *segs], "=", 0.0)
                for p in range(1, cfg.cost_segments + 1):
                    b.row("4", key + (p,), [(sp["Ps", s, g.id, h, p], 1.0), (I, -seg_cap)], "<=", 0.0)
                if h > 1:
                    prev = sp["P", s, g.id, h - 1]
                    b.row("5up", key, [(P, 1.0), (prev, -1.0)], "<=", g.ramp_up)
                    b.row("5dn", key, [(prev, 1.0), (P, -1.0)], "<=", g.ramp_down)


def rps_requirement(alpha: float, stage: int, stages: int, growth: float, total_peak: float) -> float:
    """Minimum installed WF capacity in ``stage``: alpha ramps linearly to the final stage."""
    return alpha * stage / stages * (1.0 + growth) * total_peak


def build_rps_constraints(b: _Builder) -> None:
    sys, cfg, sp = b.system, b.cfg, b.space
    cap_total = sum(bus.wf_capacity_max for bus in sys.wf_buses)
    for s in b.stages:
        for bus in sys.wf_buses:
            b.row("6", (s, bus.id), [(sp["Pw", s, bus.id], 1.0)], "<=", bus.wf_capacity_max)
        need = rps_requirement(cfg.rps_alpha, s, cfg.stages, cfg.load_growth[s - 1], sys.total_peak)
        if need > cap_total + 1e-9:
            b.warnings.append(
                f"stage {s}: renewable requirement {need:.3f} MW exceeds total WF potential {cap_total:.3f} MW"
            )
        if need > 0 or sys.wf_buses:
            b.row("7", (s,), [(sp["Pw", s, bus.id], 1.0) for bus in sys.wf_buses], ">=", need)


def build_shed_curtail_constraints(b: _Builder) -> None:
    sys, cfg, sp = b.system, b.cfg, b.space
    for s in b.stages:
        for bus in sys.wf_buses:
            pw = sp["Pw", s, bus.id]
            for h in b.hours:
                b.row("8", (s, bus.id, h), [(sp["PC", s, bus.id, h], 1.0), (pw, -b.wf(h))], "<=", 0.0)
        if sys.wf_buses:
            terms = []
            for bus in sys.wf_buses:
                for h in b.hours:
                    aw = b.annual_weight(h)
                    terms.append((sp["PC", s, bus.id, h], aw))
                    terms.append((sp["Pw", s, bus.id], -cfg.wind_curtail_beta * aw * b.wf(h)))
            b.row("9", (s,), terms, "<=", 0.0)
        for bus in sys.buses:
            for h in b.hours:
                b.row(
                    "10",
                    (s, bus.id, h),
                    [(sp["LS", s, bus.id, h], 1.0)],
                    "<=",
                    cfg.hourly_shed_gamma * b.demand(s, bus, h),
                )
        total = sum(b.annual_weight(h) * b.demand(s, bus, h) for bus in sys.buses for h in b.hours)
        terms = [(sp["LS", s, bus.id, h], b.annual_weight(h)) for bus in sys.buses for h in b.hours]
        b.row("11", (s,), terms, "<=", cfg.annual_shed_phi * total)


def reserve_requirement(wind_output: float, load: float, wind_share: float = 0.05, load_share: float = 0.03) -> float:
    return wind_share * wind_output + load_share * load


def build_reserve_constraints(b: _Builder) -> None:
    sys, cfg, sp = b.system, b.cfg, b.space
    for s in b.stages:
        for h in b.hours:
            for g in sys.generators:
                R, P = sp["R", s, g.id, h], sp["P", s, g.id, h]
                b.row("12", (s, g.id, h), [(R, 1.0), (P, -1.0)], "<=", 0.0)
                b.row("13", (s, g.id, h), [(R, 1.0), (P, 1.0)], "<=", g.p_max)
            terms = [(sp["R", s, g.id, h], 1.0) for g in sys.generators]
            terms += [(sp["Pw", s, bus.id], -cfg.reserve_wind_share * b.wf(h)) for bus in sys.wf_buses]
            load = b.growth(s) * b.lf(h) * sys.total_peak
            b.row("14", (s, h), terms, ">=", cfg.reserve_load_share * load)


def build_bes_constraints(b: _Builder) -> None:
    sys, cfg, sp = b.system, b.cfg, b.space
    ec, ed = cfg.eta_charge, cfg.eta_discharge
    for s in b.stages:
        for bus in sys.bes_buses:
            i = bus.id
            S, C = sp["S", s, i], sp["C", s, i]
            for h in b.hours:
                key = (s, i, h)
                Pc, Pd, E = sp["Pc", s, i, h], sp["Pd", s, i, h], sp["E", s, i, h]
                b.row("15", key, [(Pc, ec), (C, -1.0)], "<=", 0.0)
                b.row("16", key, [(Pd, 1.0 / ed), (C, -1.0)], "<=", 0.0)
                U = sp.get("U", s, i, h)
                if U is not None:
                    b.row("17", key, [(Pc, ec), (U, -bus.bes_power_max)], "<=", 0.0)
                    b.row("18", key, [(Pd, 1.0 / ed), (U, bus.bes_power_max)], "<=", bus.bes_power_max)
                terms = [(E, 1.0), (Pc, -ec), (Pd, 1.0 / ed)]
                if h > 1:
                    terms.append((sp["E", s, i, h - 1], -1.0))
                elif s > 1:
                    terms.append((sp["E", s - 1, i, b.H], -1.0))
                b.row("19", key, terms, "=", 0.0)
                b.row("21", key, [(E, 1.0), (S, -1.0)], "<=", 0.0)
            b.row("20", (s, i), [(C, cfg.bes_epr), (S, -1.0)], "<=", 0.0)
            b.row("22", (s, i), [(C, 1.0)], "<=", bus.bes_power_max)
            b.row("23", (s, i), [(S, 1.0)], "<=", bus.bes_energy_max)


def build_capacity_monotonicity(b: _Builder) -> None:
    """Installed BES/WF capacity never shrinks from one stage to the next."""
    sp = b.space
    for s in list(b.stages)[1:]:
        for sym, buses in (("S", b.system.bes_buses), ("C", b.system.bes_buses), ("Pw", b.system.wf_buses)):
            for bus in buses:
                b.row("cap_mono", (sym, s, bus.id), [(sp[sym, s, bus.id], 1.0), (sp[sym, s - 1, bus.id], -1.0)], ">=", 0.0)


def build_network_constraints(b: _Builder) -> None:
    sys, cfg, sp = b.system, b.cfg, b.space
    psi = cfg.base_power
    for s in b.stages:
        for h in b.hours:
            for bus in sys.buses:
                th = sp["theta", s, bus.id, h]
                if bus.id == cfg.reference_bus:
                    b.row("ref", (s, bus.id, h), [(th, 1.0)], "=", 0.0)
                else:
                    b.row("angle_hi", (s, bus.id, h), [(th, 1.0)], "<=", cfg.angle_bound)
                    b.row("angle_lo", (s, bus.id, h), [(th, 1.0)], ">=", -cfg.angle_bound)
            for ln in sys.existing_lines:
                key = (s, ln.id, h)
                Pe = sp["Pe", s, ln.id, h]
                k = psi * ln.susceptance_pu
                flow = [(sp["theta", s, ln.from_bus, h], -k), (sp["theta", s, ln.to_bus, h], k)]
                b.row("24", key, [(Pe, 1.0), *flow], "=", 0.0, line=ln.id)
                b.row("25hi", key, [(Pe, 1.0)], "<=", ln.flow_max, line=ln.id)
                b.row("25lo", key, [(Pe, 1.0)], ">=", -ln.flow_max, line=ln.id)
            for ln in sys.ac_candidates:
                k = psi * ln.susceptance_pu
                M = big_m(psi, ln.susceptance_pu, cfg.angle_bound)
                flow = [(sp["theta", s, ln.from_bus, h], -k), (sp["theta", s, ln.to_bus, h], k)]
                for c in range(1, ln.corridor_count + 1):
                    key = (s, ln.id, c, h)
                    Pl, Y = sp["Pl", s, ln.id, c, h], sp["Y", s, ln.id, c]
                    b.row("26hi", key, [(Pl, 1.0), *flow, (Y, M)], "<=", M, line=ln.id)
                    b.row("26lo", key, [(Pl, 1.0), *flow, (Y, -M)], ">=", -M, line=ln.id)
                    b.row("27hi", key, [(Pl, 1.0), (Y, -ln.flow_max)], "<=", 0.0, line=ln.id)
                    b.row("27lo", key, [(Pl, 1.0), (Y, ln.flow_max)], ">=", 0.0, line=ln.id)


def build_hvdc_constraints(b: _Builder) -> None:
    sys, cfg, sp = b.system, b.cfg, b.space
    phi, psi, chi = cfg.vsc_loss_coeffs
    N = cfg.pwl_blocks
    for s in b.stages:
        for h in b.hours:
            for k, ln in enumerate(sys.dc_candidates):
                slopes = pwl_slopes(ln.flow_max, N)
                yd = [sp["Yd", s, ln.id, c] for c in range(1, ln.corridor_count + 1)]
                coupling = [(j, -2.0 * phi) for j in yd]
                for v in (2 * k + 1, 2 * k + 2):
                    key = (s, v, ln.id, h)
                    Pv, Pvp, Pvm = sp[("Pv", *key)], sp[("Pvp", *key)], sp[("Pvm", *key)]
                    deltas = [sp[("Delta", n, *key)] for n in range(1, N + 1)]
                    for n, d in enumerate(deltas, start=1):
                        b.row("30", (n, *key), [(d, 1.0)], "<=", ln.flow_max / N, line=ln.id)
                    b.row("31", key, [*((d, 1.0) for d in deltas), (Pvp, -1.0), (Pvm, -1.0)], "=", 0.0, line=ln.id)
                    b.row("32", key, [(Pv, 1.0), (Pvp, -1.0), (Pvm, 1.0)], "=", 0.0, line=ln.id)
                    b.row("34hi", key, [(Pv, 1.0), *((j, -ln.flow_max) for j in yd)], "<=", 0.0, line=ln.id)
                    b.row("34lo", key, [(Pv, 1.0), *((j, ln.flow_max) for j in yd)], ">=", 0.0, line=ln.id)
                    # converter AC-side injection minus its linear and quadratic losses
                    coupling.append((Pv, 1.0))
                    coupling.extend((d, -psi - chi * sl) for d, sl in zip(deltas, slopes))
                b.row("33", (s, ln.id, h), coupling, "=", 0.0, line=ln.id)


def build_power_balance(b: _Builder) -> None:
    sys, sp = b.system, b.space
    inc = sys.incidence
    idx = sys.bus_index
    for s in b.stages:
        for h in b.hours:
            for bus in sys.buses:
                i = bus.id
                r = idx[i]
                terms = [(sp["P", s, g.id, h], 1.0) for g in sys.generators if g.bus == i]
                if bus.is_wf_candidate:
                    terms += [(sp["Pw", s, i], b.wf(h)), (sp["PC", s, i, h], -1.0)]
                if bus.is_bes_candidate:
                    terms += [(sp["Pd", s, i, h], 1.0), (sp["Pc", s, i, h], -1.0)]
                for k, ln in enumerate(sys.existing_lines):
                    if inc.A[r, k]:
                        terms.append((sp["Pe", s, ln.id, h], -inc.A[r, k]))
                for k, ln in enumerate(sys.ac_candidates):
                    if inc.K[r, k]:
                        for c in range(1, ln.corridor_count + 1):
                            terms.append((sp["Pl", s, ln.id, c, h], -inc.K[r, k]))
                for k, ln in enumerate(sys.dc_candidates):
                    for v in (2 * k + 1, 2 * k + 2):
                        if inc.Kb[r, v - 1]:
                            terms.append((sp["Pv", s, v, ln.id, h], -inc.Kb[r, v - 1]))
                terms.append((sp["LS", s, i, h], 1.0))
                b.row("35", (s, i, h), terms, "=", b.demand(s, bus, h))


def build_model(system: PowerSystem, reps: RepresentativeSet, failed: Iterable[int] = ()) -> MilpModel:
    b = _Builder(system, reps)
    declare_variables(b)
    build_generator_constraints(b)
    build_rps_constraints(b)
    build_shed_curtail_constraints(b)
    build_reserve_constraints(b)
    build_bes_constraints(b)
    build_capacity_monotonicity(b)
    build_network_constraints(b)
    build_hvdc_constraints(b)
    build_power_balance(b)
    comp, const = build_objective(b)
    unknown = set(b.space.symbols) - set(SYMBOL_CLASS)
    if unknown:
        raise ModelError(f"symbols without a compact class: {unknown}")
    model = MilpModel(b.space, b.rows, comp, const, system, reps, frozenset(), b.warnings)
    failed = frozenset(failed)
    return apply_failure_scenario(model, failed) if failed else model


def apply_failure_scenario(model: MilpModel, failed: Iterable[int]) -> MilpModel:
    """Take the listed hurricane-zone lines out of service in every stage and hour.

    Existing lines lose their flow law and get zero flow limits. Candidate
    lines keep their build binaries but are masked so that they carry no
    flow and impose no angle coupling or converter loss.
    """
    failed = frozenset(failed)
    if not failed:
        return model
    sys = model.system
    for l in failed:
        ln = sys.line_by_id.get(l)
        if ln is None or not ln.in_hurricane_zone:
            raise ModelError(f"line {l} is not a hurricane-zone line")
    ycols = set(model.binary_columns().tolist())
    rows: list[Row] = []
    for row in model.rows:
        if row.line not in failed:
            rows.append(row)
            continue
        fam = row.family
        if fam == "24":
            continue
        coeffs = {j: v for j, v in row.coeffs.items() if j not in ycols}
        if fam in ("25hi", "25lo", "27hi", "27lo", "34hi", "34lo"):
            # flow limits collapse to zero
            rows.append(replace(row, coeffs=coeffs, rhs=0.0))
        elif fam in ("26hi", "26lo", "33"):
            # big-M slack kept at its open-line value; converter constant loss dropped
            rows.append(replace(row, coeffs=coeffs))
        else:
            rows.append(row)
    return replace(model, rows=rows, failed=model.failed | failed)


@dataclass
class CompactBlocks:
    """Compact matrices of the decomposition, keyed by block and column class.

    ``A[block][cls]`` is the coefficient matrix of column class ``cls`` in the
    balance ("bal"), equality ("eq") or inequality ("ineq", >= form) block;
    ``rhs[block]`` the right-hand sides (F, M, N) and ``cost[cls]`` the cost
    vectors (I_L, I_S, I_W, O_C).
    """

    A: dict[str, dict[str, np.ndarray]]
    rhs: dict[str, np.ndarray]
    cost: dict[str, np.ndarray]
    cols: dict[str, np.ndarray]
    rows: dict[str, list[Row]]
    constant: float
    model: MilpModel

    # named accessors mirroring the compact notation
    C = property(lambda self: self.A["bal"]["W"])
    D = property(lambda self: self.A["bal"]["P"])
    E = property(lambda self: self.A["bal"]["Q"])
    F = property(lambda self: self.rhs["bal"])
    G1 = property(lambda self: self.A["eq"]["Y"])
    H1 = property(lambda self: self.A["eq"]["S"])
    J1 = property(lambda self: self.A["eq"]["W"])
    K1 = property(lambda self: self.A["eq"]["P"])
    L1 = property(lambda self: self.A["eq"]["Q"])
    M = property(lambda self: self.rhs["eq"])
    G2 = property(lambda self: self.A["ineq"]["Y"])
    H2 = property(lambda self: self.A["ineq"]["S"])
    J2 = property(lambda self: self.A["ineq"]["W"])
    K2 = property(lambda self: self.A["ineq"]["P"])
    L2 = property(lambda self: self.A["ineq"]["Q"])
    N = property(lambda self: self.rhs["ineq"])
    I_L = property(lambda self: self.cost["Y"])
    I_S = property(lambda self: self.cost["S"])
    I_W = property(lambda self: self.cost["W"])
    O_C = property(lambda self: self.cost["P"])

    def families(self, block: str) -> list[str]:
        return [r.family for r in self.rows[block]]

    def objective(self, x: np.ndarray) -> float:
        """Reassemble I_L'Y + I_S'S + I_W'W + O_C'P (+ constant) from a full column vector."""
        return float(sum(self.cost[c] @ x[self.cols[c]] for c in ("Y", "S", "W", "P"))) + self.constant


def partition_compact(model: MilpModel) -> CompactBlocks:
    blocks: dict[str, list[Row]] = {"bal": [], "eq": [], "ineq": []}
    for row in model.rows:
        if row.family in BALANCE_FAMILIES:
            blocks["bal"].append(row)
        elif row.family in EQUALITY_FAMILIES:
            blocks["eq"].append(row)
        elif row.family in INEQUALITY_FAMILIES:
            blocks["ineq"].append(row)
        else:
            raise ModelError(f"row family {row.family!r} is not assigned to a compact block")
    for name in ("bal", "eq"):
        bad = [r for r in blocks[name] if r.sense != "="]
        if bad:
            raise ModelError(f"non-equality row {bad[0].family} in block {name}")
    cols = {c: model.space.columns(c) for c in ("Y", "S", "W", "P", "Q")}
    A: dict[str, dict[str, np.ndarray]] = {}
    rhs: dict[str, np.ndarray] = {}
    for name, rows in blocks.items():
        full = model.matrix(rows)
        b = np.array([r.rhs for r in rows])
        if name == "ineq":
            sign = np.array([-1.0 if r.sense == "<=" else 1.0 for r in rows])
            full = full * sign[:, None]
            b = b * sign
        A[name] = {c: full[:, idx] for c, idx in cols.items()}
        rhs[name] = b
    if np.any(A["bal"]["Y"]) or np.any(A["bal"]["S"]):
        raise ModelError("balance rows may only involve W, P and Q columns")
    cost = model.cost
    if np.any(cost[cols["Q"]]):
        raise ModelError("free operating variables must carry no cost")
    return CompactBlocks(A, rhs, {c: cost[idx] for c, idx in cols.items()}, cols, blocks, model.constant, model)
