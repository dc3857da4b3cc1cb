"""Power system data model: buses, lines, generators, planning configuration.

Systems are read from a JSON document with top-level keys ``buses``,
``lines``, ``generators`` and ``config``. Field names match the dataclass
attributes below. Monetary units follow the nomenclature of the planning
model: line, substation, VSC and wind-farm costs are in 10^6 $, operating
and BES costs in $.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from functools import cached_property
from pathlib import Path
from typing import Any, NamedTuple

import numpy as np

LINE_KINDS = ("existing", "candidate_ac", "candidate_dc")


class SystemDataError(ValueError):
    """Invalid system data. ``context`` names the offending record/field."""

    def __init__(self, message: str, context: str = ""):
        self.context = context
        super().__init__(f"{context}: {message}" if context else message)


@dataclass(frozen=True)
class Bus:
    id: int
    peak_load: float = 0.0
    is_bes_candidate: bool = False
    is_wf_candidate: bool = False
    wf_capacity_max: float = 0.0
    bes_power_max: float = 0.0
    bes_energy_max: float = 0.0
    bes_energy_cost: float = 0.0
    bes_power_cost: float = 0.0
    wf_invest_cost: float = 0.0
    shed_cost: float = 1000.0
    curtail_cost: float = 2000.0

    def validate(self, ctx: str) -> None:
        for f in fields(self):
            if f.name in ("id", "is_bes_candidate", "is_wf_candidate"):
                continue
            value = getattr(self, f.name)
            if not math.isfinite(value) or value < 0:
                raise SystemDataError(f"negative or non-finite value {value!r}", f"{ctx}.{f.name}")
        if self.is_wf_candidate and self.wf_capacity_max <= 0:
            raise SystemDataError("wind-farm candidate needs wf_capacity_max > 0", ctx)
        if self.is_bes_candidate and (self.bes_power_max <= 0 or self.bes_energy_max <= 0):
            raise SystemDataError("BES candidate needs positive bes_power_max and bes_energy_max", ctx)


@dataclass(frozen=True)
class Line:
    id: int
    from_bus: int
    to_bus: int
    kind: str = "existing"
    circuits: int = 1
    susceptance_pu: float = 0.0
    flow_max: float = 0.0
    length: float = 0.0
    invest_cost: float = 0.0
    row_cost: float = 0.0
    substation_cost: float = 0.0
    vsc_cost: float = 0.0
    in_hurricane_zone: bool = False
    corridor_count: int = 1

    @property
    def is_ac(self) -> bool:
        return self.kind in ("existing", "candidate_ac")

    @property
    def is_candidate(self) -> bool:
        return self.kind != "existing"

    def validate(self, ctx: str) -> None:
        if self.kind not in LINE_KINDS:
            raise SystemDataError(f"unknown kind {self.kind!r}", f"{ctx}.kind")
        if self.from_bus == self.to_bus:
            raise SystemDataError("from_bus equals to_bus", ctx)
        if self.circuits not in (1, 2):
            raise SystemDataError("circuits must be 1 or 2", f"{ctx}.circuits")
        if self.corridor_count < 1:
            raise SystemDataError("corridor_count must be >= 1", f"{ctx}.corridor_count")
        if not self.flow_max > 0:
            raise SystemDataError("flow_max must be positive", f"{ctx}.flow_max")
        for name in ("length", "invest_cost", "row_cost", "substation_cost", "vsc_cost", "susceptance_pu"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise SystemDataError(f"negative or non-finite value {value!r}", f"{ctx}.{name}")
        if self.is_ac and not self.susceptance_pu > 0:
            raise SystemDataError("HVAC line needs susceptance_pu > 0", f"{ctx}.susceptance_pu")
        if self.kind == "candidate_dc" and self.susceptance_pu != 0:
            raise SystemDataError("HVDC line carries no susceptance", f"{ctx}.susceptance_pu")
        if self.kind != "candidate_dc" and self.vsc_cost != 0:
            raise SystemDataError("only HVDC lines carry vsc_cost", f"{ctx}.vsc_cost")


@dataclass(frozen=True)
class Generator:
    id: int
    bus: int
    p_min: float
    p_max: float
    segment_costs: tuple[float, ...]
    ramp_up: float
    ramp_down: float

    def validate(self, ctx: str) -> None:
        if not 0 <= self.p_min <= self.p_max:
            raise SystemDataError("need 0 <= p_min <= p_max", ctx)
        if not self.segment_costs:
            raise SystemDataError("at least one cost segment required", f"{ctx}.segment_costs")
        if any(c < 0 for c in self.segment_costs):
            raise SystemDataError("negative segment cost", f"{ctx}.segment_costs")
        if any(b < a for a, b in zip(self.segment_costs, self.segment_costs[1:])):
            raise SystemDataError("segment costs must be nondecreasing", f"{ctx}.segment_costs")
        if not (self.ramp_up > 0 and self.ramp_down > 0):
            raise SystemDataError("ramp limits must be positive", ctx)


@dataclass(frozen=True)
class PlanningConfig:
    stages: int = 4
    interest_rate: float = 0.05
    lifetimes: dict = field(default_factory=lambda: {"line": 50, "bes": 10, "wf": 20})
    rps_alpha: float = 0.2
    wind_curtail_beta: float = 0.4
    hourly_shed_gamma: float = 0.0
    annual_shed_phi: float = 0.0
    reserve_cost_xi: float = 0.1
    bes_epr: float = 3.0
    base_power: float = 100.0
    vsc_loss_coeffs: tuple[float, float, float] = (0.12, 0.0029, 0.00031)
    cost_segments: int = 1
    pwl_blocks: int = 5
    benders_eps: float = 1e-3
    load_growth: tuple[float, ...] = (0.0, 0.0, 0.0, 0.0)
    tower_spacing: float = 500.0
    angle_bound: float = 0.6
    reference_bus: int = 1
    eta_charge: float = 0.9
    eta_discharge: float = 0.9
    reserve_wind_share: float = 0.05
    reserve_load_share: float = 0.03
    # unit commitment binaries I; when off every unit is committed (I = 1)
    unit_commitment: bool = True
    # charge/discharge binaries U for BES exclusivity
    bes_binary: bool = True
    # rho-weighted annual sums in the curtailment/shedding budgets
    weighted_annual: bool = False

    def validate(self) -> None:
        ctx = "config"
        if self.stages < 1:
            raise SystemDataError("stages must be >= 1", f"{ctx}.stages")
        if self.interest_rate < 0:
            raise SystemDataError("interest_rate must be >= 0", f"{ctx}.interest_rate")
        for key in ("line", "bes", "wf"):
            if key not in self.lifetimes:
                raise SystemDataError(f"missing lifetime for {key!r}", f"{ctx}.lifetimes")
            if self.lifetimes[key] < 1:
                raise SystemDataError(f"lifetime for {key!r} must be >= 1", f"{ctx}.lifetimes")
        for name in ("rps_alpha", "wind_curtail_beta", "hourly_shed_gamma", "annual_shed_phi"):
            value = getattr(self, name)
            if not 0 <= value <= 1:
                raise SystemDataError("must lie in [0, 1]", f"{ctx}.{name}")
        if self.cost_segments < 1 or self.pwl_blocks < 1:
            raise SystemDataError("cost_segments and pwl_blocks must be >= 1", ctx)
        if not self.benders_eps > 0:
            raise SystemDataError("benders_eps must be positive", f"{ctx}.benders_eps")
        if len(self.load_growth) != self.stages:
            raise SystemDataError(
                f"load_growth has {len(self.load_growth)} entries for {self.stages} stages",
                f"{ctx}.load_growth",
            )
        if any(b < a for a, b in zip(self.load_growth, self.load_growth[1:])):
            raise SystemDataError("load_growth must be nondecreasing", f"{ctx}.load_growth")
        if not (0 < self.eta_charge <= 1 and 0 < self.eta_discharge <= 1):
            raise SystemDataError("efficiencies must lie in (0, 1]", ctx)
        if not (self.angle_bound > 0 and self.base_power > 0 and self.tower_spacing > 0):
            raise SystemDataError("angle_bound, base_power and tower_spacing must be positive", ctx)

    def replace(self, **changes: Any) -> "PlanningConfig":
        data = asdict(self)
        data.update(changes)
        return _config_from_dict(data)


class Incidence(NamedTuple):
    A: np.ndarray  # buses x existing lines, signed
    K: np.ndarray  # buses x candidate HVAC lines, signed
    Kl: np.ndarray  # HVDC lines x VSCs
    Kb: np.ndarray  # buses x VSCs


@dataclass(frozen=True)
class PowerSystem:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    generators: tuple[Generator, ...]
    config: PlanningConfig

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        ids = [b.id for b in self.buses]
        if len(set(ids)) != len(ids):
            raise SystemDataError("duplicate bus id", "buses")
        known = set(ids)
        for k, bus in enumerate(self.buses):
            bus.validate(f"buses[{k}]")
        line_ids = [ln.id for ln in self.lines]
        if len(set(line_ids)) != len(line_ids):
            raise SystemDataError("duplicate line id", "lines")
        for k, line in enumerate(self.lines):
            line.validate(f"lines[{k}]")
            for end in ("from_bus", "to_bus"):
                if getattr(line, end) not in known:
                    raise SystemDataError(
                        f"references unknown bus {getattr(line, end)}", f"lines[{k}].{end}"
                    )
        for k, gen in enumerate(self.generators):
            gen.validate(f"generators[{k}]")
            if gen.bus not in known:
                raise SystemDataError(f"references unknown bus {gen.bus}", f"generators[{k}].bus")
            if len(gen.segment_costs) != self.config.cost_segments:
                raise SystemDataError(
                    f"{len(gen.segment_costs)} segment costs, config.cost_segments="
                    f"{self.config.cost_segments}",
                    f"generators[{k}].segment_costs",
                )
        self.config.validate()
        if self.config.reference_bus not in known:
            raise SystemDataError("reference bus not in system", "config.reference_bus")

    @cached_property
    def bus_index(self) -> dict[int, int]:
        return {b.id: k for k, b in enumerate(self.buses)}

    @cached_property
    def existing_lines(self) -> tuple[Line, ...]:
        return tuple(ln for ln in self.lines if ln.kind == "existing")

    @cached_property
    def ac_candidates(self) -> tuple[Line, ...]:
        return tuple(ln for ln in self.lines if ln.kind == "candidate_ac")

    @cached_property
    def dc_candidates(self) -> tuple[Line, ...]:
        return tuple(ln for ln in self.lines if ln.kind == "candidate_dc")

    @cached_property
    def line_by_id(self) -> dict[int, Line]:
        return {ln.id: ln for ln in self.lines}

    @property
    def bes_buses(self) -> tuple[Bus, ...]:
        return tuple(b for b in self.buses if b.is_bes_candidate)

    @property
    def wf_buses(self) -> tuple[Bus, ...]:
        return tuple(b for b in self.buses if b.is_wf_candidate)

    @property
    def total_peak(self) -> float:
        return float(sum(b.peak_load for b in self.buses))

    @cached_property
    def incidence(self) -> Incidence:
        return build_incidence(self)

    def with_config(self, config: PlanningConfig) -> "PowerSystem":
        return PowerSystem(self.buses, self.lines, self.generators, config)

    def without(self, *, hvdc: bool = False, bes: bool = False) -> "PowerSystem":
        """Copy with HVDC candidates and/or BES candidacy removed."""
        lines = tuple(ln for ln in self.lines if not (hvdc and ln.kind == "candidate_dc"))
        buses = self.buses
        if bes:
            buses = tuple(
                Bus(**{**asdict(b), "is_bes_candidate": False, "bes_power_max": 0.0, "bes_energy_max": 0.0})
                for b in self.buses
            )
        return PowerSystem(buses, lines, self.generators, self.config)

    def to_dict(self) -> dict:
        cfg = asdict(self.config)
        cfg["vsc_loss_coeffs"] = list(cfg["vsc_loss_coeffs"])
        cfg["load_growth"] = list(cfg["load_growth"])
        gens = []
        for g in self.generators:
            d = asdict(g)
            d["segment_costs"] = list(d["segment_costs"])
            gens.append(d)
        return {
            "buses": [asdict(b) for b in self.buses],
            "lines": [asdict(ln) for ln in self.lines],
            "generators": gens,
            "config": cfg,
        }


def capital_recovery_factor(rate: float, lifetime: int) -> float:
    """Annuity factor r(1+r)^LT / ((1+r)^LT - 1); 1/LT in the zero-rate limit."""
    if lifetime < 1:
        raise ValueError("lifetime must be >= 1")
    if rate < 0:
        raise ValueError("rate must be >= 0")
    if rate == 0:
        return 1.0 / lifetime
    growth = (1.0 + rate) ** lifetime
    return rate * growth / (growth - 1.0)


def build_incidence(system: PowerSystem) -> Incidence:
    n = len(system.buses)
    idx = system.bus_index

    def signed(lines: tuple[Line, ...]) -> np.ndarray:
        mat = np.zeros((n, len(lines)))
        for k, ln in enumerate(lines):
            mat[idx[ln.from_bus], k] = 1.0
            mat[idx[ln.to_bus], k] = -1.0
        return mat

    dc = system.dc_candidates
    kl = np.zeros((len(dc), 2 * len(dc)))
    kb = np.zeros((n, 2 * len(dc)))
    for k, ln in enumerate(dc):
        kl[k, 2 * k] = kl[k, 2 * k + 1] = 1.0
        kb[idx[ln.from_bus], 2 * k] = 1.0
        kb[idx[ln.to_bus], 2 * k + 1] = 1.0
    return Incidence(signed(system.existing_lines), signed(system.ac_candidates), kl, kb)


# ---------------------------------------------------------------- file i/o


def _build(cls, data: Any, ctx: str):
    if not isinstance(data, dict):
        raise SystemDataError(f"expected an object, got {type(data).__name__}", ctx)
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise SystemDataError(f"unknown field(s) {sorted(unknown)}", ctx)
    try:
        obj = cls(**data)
    except TypeError as exc:
        raise SystemDataError(str(exc), ctx) from None
    return obj


def _config_from_dict(data: dict) -> PlanningConfig:
    data = dict(data)
    for key in ("vsc_loss_coeffs", "load_growth"):
        if key in data:
            data[key] = tuple(float(v) for v in data[key])
    if "lifetimes" in data:
        data["lifetimes"] = dict(data["lifetimes"])
    cfg = _build(PlanningConfig, data, "config")
    if "load_growth" not in data:
        cfg = PlanningConfig(**{**asdict(cfg), "load_growth": (0.0,) * cfg.stages})
    return cfg


def system_from_dict(doc: dict) -> PowerSystem:
    if not isinstance(doc, dict):
        raise SystemDataError("top level must be an object")
    for key in ("buses", "lines", "generators"):
        if key not in doc:
            raise SystemDataError(f"missing top-level key {key!r}")
        if not isinstance(doc[key], list):
            raise SystemDataError("expected a list", key)
    buses = tuple(_build(Bus, b, f"buses[{k}]") for k, b in enumerate(doc["buses"]))
    lines = tuple(_build(Line, ln, f"lines[{k}]") for k, ln in enumerate(doc["lines"]))
    gens = []
    for k, g in enumerate(doc["generators"]):
        if isinstance(g, dict) and "segment_costs" in g:
            g = {**g, "segment_costs": tuple(float(c) for c in g["segment_costs"])}
        gens.append(_build(Generator, g, f"generators[{k}]"))
    config = _config_from_dict(doc.get("config", {}))
    return PowerSystem(buses, lines, tuple(gens), config)


def load_system(path: str | Path) -> PowerSystem:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SystemDataError(f"parse error: {exc.msg}", f"{path}:{exc.lineno}:{exc.colno}") from None
    return system_from_dict(doc)


def dump_system(system: PowerSystem, path: str | Path) -> None:
    Path(path).write_text(json.dumps(system.to_dict(), indent=2) + "\n")
