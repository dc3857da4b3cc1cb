"""Plan reports: cumulative builds per stage, cost table, operating totals."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .benders import PlanSolution

COST_ROWS = ("AL", "DL", "BE", "WF", "GF", "LWC", "TIC", "TOC", "TPC")
COST_LABELS = {
    "AL": "HVAC lines",
    "DL": "HVDC lines",
    "BE": "BES",
    "WF": "Wind farms",
    "GF": "Generation",
    "LWC": "Shedding and curtailment",
    "TIC": "Total investment",
    "TOC": "Total operation",
    "TPC": "Total planning cost",
}


def fmt(value: float) -> str:
    if value is None or not np.isfinite(value):
        return "inf" if value is not None and value > 0 else "nan"
    out = f"{value:.6f}"
    return "0.000000" if out == "-0.000000" else out


@dataclass
class StageBuild:
    stage: int
    ac_lines: list[tuple[int, int, int]] = field(default_factory=list)  # (line, corridor, circuits)
    dc_lines: list[tuple[int, int]] = field(default_factory=list)  # (line, corridor)
    wind: dict[int, float] = field(default_factory=dict)  # bus -> MW
    storage: dict[int, tuple[float, float]] = field(default_factory=dict)  # bus -> (MW, MWh)


@dataclass
class PlanReport:
    status: str
    stages: list[StageBuild]
    costs: dict[str, float]
    total_shed: float
    total_curtailment: float
    iterations: int
    lb: float
    ub: float
    gap: float
    binding_scenario: str
    contingencies: list[str]

    def text(self) -> str:
        out = ["Co-planning results (cumulative installed capacity per stage)", ""]
        for st in self.stages:
            out.append(f"Stage {st.stage}")
            ac = ", ".join(f"L{l} c{c} x{n}" for l, c, n in st.ac_lines) or "-"
            dc = ", ".join(f"L{l} c{c}" for l, c in st.dc_lines) or "-"
            wf = ", ".join(f"bus {b}: {fmt(v)} MW" for b, v in st.wind.items()) or "-"
            bes = ", ".join(f"bus {b}: {fmt(p)} MW / {fmt(e)} MWh" for b, (p, e) in st.storage.items()) or "-"
            out += [f"  HVAC lines : {ac}", f"  HVDC lines : {dc}", f"  Wind farms : {wf}", f"  BES        : {bes}"]
        out += ["", "Costs (10^6 $)"]
        for key in COST_ROWS:
            out.append(f"  {key:<4} {COST_LABELS[key]:<26} {fmt(self.costs.get(key, 0.0)):>16}")
        out += [
            "",
            f"Load shed (intact grid)        {fmt(self.total_shed)} MWh",
            f"Wind curtailment (intact grid) {fmt(self.total_curtailment)} MWh",
            "",
            f"Status {self.status}; {self.iterations} iterations; LB {fmt(self.lb)}; UB {fmt(self.ub)}; gap {fmt(self.gap)}",
            f"Binding scenario {self.binding_scenario}; contingencies: {', '.join(self.contingencies) or 'none'}",
        ]
        return "\n".join(out) + "\n"


def _positive(v: float, tol: float = 1e-6) -> bool:
    return v > tol


def build_report(plan: PlanSolution) -> PlanReport:
    model = plan.model
    sys = model.system
    sp = model.space
    S = sys.config.stages
    stages = [StageBuild(s) for s in range(1, S + 1)]
    circuits = {ln.id: ln.circuits for ln in sys.lines}
    for s, l, c, kind in plan.built():
        st = stages[s - 1]
        if kind == "ac":
            st.ac_lines.append((l, c, circuits[l]))
        else:
            st.dc_lines.append((l, c))
    x = plan.x
    if x is not None:
        for st in stages:
            for bus in sys.wf_buses:
                v = x[sp["Pw", st.stage, bus.id]]
                if _positive(v):
                    st.wind[bus.id] = float(v)
            for bus in sys.bes_buses:
                p, e = x[sp["C", st.stage, bus.id]], x[sp["S", st.stage, bus.id]]
                if _positive(p) or _positive(e):
                    st.storage[bus.id] = (float(p), float(e))
    costs = dict(plan.costs) if plan.costs else {k: 0.0 for k in COST_ROWS}
    return PlanReport(
        plan.status,
        stages,
        costs,
        plan.total_shed,
        plan.total_curtailment,
        len(plan.iterations),
        plan.lb,
        plan.ub,
        plan.gap,
        plan.binding_scenario,
        [s.name for s in plan.scenarios if s.failed],
    )


def render_report(plan: PlanSolution, out_dir: str | Path, speed_scenarios: list | None = None) -> PlanReport:
    """Write plan.txt, plan.csv, costs.csv, iterations.csv and scenarios.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = build_report(plan)
    (out / "plan.txt").write_text(report.text())

    with open(out / "plan.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["stage", "asset", "id", "corridor", "circuits", "power_mw", "energy_mwh"])
        for st in report.stages:
            for l, c, n in st.ac_lines:
                w.writerow([st.stage, "hvac_line", l, c, n, "", ""])
            for l, c in st.dc_lines:
                w.writerow([st.stage, "hvdc_line", l, c, 1, "", ""])
            for b, v in st.wind.items():
                w.writerow([st.stage, "wind_farm", b, "", "", fmt(v), ""])
            for b, (p, e) in st.storage.items():
                w.writerow([st.stage, "bes", b, "", "", fmt(p), fmt(e)])

    with open(out / "costs.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["component", "value_musd"])
        for key in COST_ROWS:
            w.writerow([key, fmt(report.costs.get(key, 0.0))])
        w.writerow(["load_shed_mwh", fmt(report.total_shed)])
        w.writerow(["wind_curtailment_mwh", fmt(report.total_curtailment)])

    write_iterations(plan, out / "iterations.csv")

    doc = {
        "speed_scenarios": [{"speed": s.speed, "probability": s.probability} for s in speed_scenarios or []],
        "contingencies": [s.to_dict() for s in plan.scenarios],
        "binding_scenario": plan.binding_scenario,
    }
    (out / "scenarios.json").write_text(json.dumps(_round(doc), indent=2, sort_keys=True) + "\n")
    return report


def write_iterations(plan: PlanSolution, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iter", "LB", "UB", "gap", "n_opt_cuts", "n_feas_cuts", "worst_scenario"])
        for r in plan.iterations:
            w.writerow([r.iteration, fmt(r.lb), fmt(r.ub), fmt(r.gap), r.n_opt_cuts, r.n_feas_cuts, r.worst_scenario])


def _round(obj):
    if isinstance(obj, float):
        return float(fmt(obj)) if np.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_round(v) for v in obj]
    return obj
