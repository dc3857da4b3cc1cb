"""Synthetic inputs: hourly load/wind years and small randomized test systems."""

from __future__ import annotations

import numpy as np

from .clustering import HourlySeries, RepresentativeSet
from .system import Bus, Generator, Line, PlanningConfig, PowerSystem


def synthetic_year(seed: int = 0, days: int = 365) -> HourlySeries:
    """Load with daily and seasonal cycles; wind as a clipped AR(1) process."""
    rng = np.random.default_rng(seed)
    n = days * 24
    t = np.arange(n)
    daily = 0.15 * np.sin(2 * np.pi * (t % 24 - 8) / 24)
    seasonal = 0.1 * np.cos(2 * np.pi * t / n)
    load = 0.65 + daily + seasonal + 0.03 * rng.standard_normal(n)
    wind = np.empty(n)
    level = 0.4
    for k in range(n):
        level = 0.4 + 0.95 * (level - 0.4) + 0.08 * rng.standard_normal()
        wind[k] = level
    return HourlySeries(np.clip(np.stack([load, wind], axis=1), 0.0, 1.0), f"synthetic-{seed}")


def random_representatives(rng: np.random.Generator, hours: int, total: float = 8760.0) -> RepresentativeSet:
    load = rng.uniform(0.5, 1.0, hours)
    wind = rng.uniform(0.1, 0.9, hours)
    w = rng.uniform(0.5, 1.5, hours)
    return RepresentativeSet(load, wind, w / w.sum() * total)


def random_toy_system(
    seed: int,
    *,
    max_binaries: int = 4,
    strict_shedding: bool | None = None,
) -> tuple[PowerSystem, RepresentativeSet]:
    """A 3 to 5 bus system with at most ``max_binaries`` build binaries.

    Bus 1 hosts a cheap large generator; remote buses are fed through a
    radial chain of thin existing lines, so candidate lines relieve
    congestion or shedding. Commitment and BES-exclusivity binaries are off
    so the binary count is exactly the number of (stage, line, corridor)
    build decisions.
    """
    rng = np.random.default_rng(seed)
    n_bus = int(rng.integers(3, 6))
    stages = int(rng.integers(1, 3))
    hours = int(rng.integers(2, 5))
    if strict_shedding is None:
        strict_shedding = bool(rng.integers(0, 2))
    gamma = 0.0 if strict_shedding else 1.0

    buses = []
    wf_bus = int(rng.integers(2, n_bus + 1)) if rng.random() < 0.5 else None
    bes_bus = int(rng.integers(2, n_bus + 1)) if rng.random() < 0.4 else None
    for i in range(1, n_bus + 1):
        kw = {}
        if i == wf_bus:
            kw.update(is_wf_candidate=True, wf_capacity_max=80.0, wf_invest_cost=float(rng.uniform(0.5, 1.5)))
        if i == bes_bus:
            kw.update(
                is_bes_candidate=True,
                bes_power_max=30.0,
                bes_energy_max=90.0,
                bes_energy_cost=float(rng.uniform(2e4, 6e4)),
                bes_power_cost=float(rng.uniform(2e4, 6e4)),
            )
        peak = 0.0 if i == 1 else float(rng.uniform(20, 60))
        buses.append(Bus(i, peak_load=peak, **kw))

    lines = []
    lid = 1
    peaks = np.array([b.peak_load for b in buses])
    for i in range(2, n_bus + 1):
        # sized around the downstream peak so some builds are needed, some not
        downstream = peaks[i - 1 :].sum()
        lines.append(
            Line(
                lid, i - 1, i, "existing",
                susceptance_pu=float(rng.uniform(2, 8)),
                flow_max=float(downstream * rng.uniform(0.7, 1.3)),
                length=float(rng.uniform(5, 40)),
                in_hurricane_zone=bool(rng.random() < 0.5),
            )
        )  # fmt: skip
        lid += 1
    per_stage = max(1, max_binaries // stages)
    n_cand = int(rng.integers(1, per_stage + 1))
    for _ in range(n_cand):
        a, b = sorted(rng.choice(np.arange(1, n_bus + 1), 2, replace=False).tolist())
        if rng.random() < 0.25:
            lines.append(
                Line(
                    lid, a, b, "candidate_dc",
                    flow_max=float(rng.uniform(40, 100)),
                    length=float(rng.uniform(10, 60)),
                    invest_cost=float(rng.uniform(0.2, 0.6)),
                    row_cost=0.05,
                    vsc_cost=float(rng.uniform(0.005, 0.02)),
                    in_hurricane_zone=bool(rng.random() < 0.3),
                )
            )  # fmt: skip
        else:
            lines.append(
                Line(
                    lid, a, b, "candidate_ac",
                    susceptance_pu=float(rng.uniform(2, 8)),
                    flow_max=float(rng.uniform(40, 100)),
                    length=float(rng.uniform(10, 60)),
                    invest_cost=float(rng.uniform(0.1, 0.5)),
                    row_cost=0.05,
                    substation_cost=float(rng.uniform(0.5, 2.0)),
                    in_hurricane_zone=bool(rng.random() < 0.3),
                )
            )  # fmt: skip
        lid += 1

    gens = [Generator(1, 1, 0.0, 400.0, (float(rng.uniform(15, 25)),), 400.0, 400.0)]
    if rng.random() < 0.6:
        g_bus = int(rng.integers(2, n_bus + 1))
        gens.append(Generator(2, g_bus, 0.0, float(rng.uniform(20, 60)), (float(rng.uniform(60, 120)),), 100.0, 100.0))

    cfg = PlanningConfig(
        stages=stages,
        load_growth=tuple(float(v) for v in np.cumsum(rng.uniform(0.0, 0.1, stages))),
        rps_alpha=0.0 if wf_bus is None else 0.1,
        hourly_shed_gamma=gamma,
        annual_shed_phi=gamma,
        unit_commitment=False,
        bes_binary=False,
        wind_curtail_beta=0.4,
    )
    system = PowerSystem(tuple(buses), tuple(lines), tuple(gens), cfg)
    return system, random_representatives(rng, hours)


def fragile_tie_system(stages: int = 1) -> tuple[PowerSystem, RepresentativeSet]:
    """Two areas joined by one long hurricane-exposed tie; a sheltered parallel route can be built.

    Area A (bus 1) has cheap generation; area B (bus 2, 3) relies on the tie
    and an expensive local unit. Losing the tie forces shedding in B unless
    the candidate line 1-3, outside the hurricane zone, is in service.
    """
    buses = (
        Bus(1, peak_load=20.0),
        Bus(2, peak_load=60.0),
        Bus(3, peak_load=40.0),
    )
    lines = (
        Line(1, 1, 2, "existing", susceptance_pu=5.0, flow_max=150.0, length=40.0, in_hurricane_zone=True),
        Line(2, 2, 3, "existing", susceptance_pu=5.0, flow_max=100.0, length=10.0),
        Line(
            3, 1, 3, "candidate_ac",
            susceptance_pu=4.0, flow_max=120.0, length=30.0,
            invest_cost=0.3, row_cost=0.05, substation_cost=1.0,
        ),
    )  # fmt: skip
    gens = (
        Generator(1, 1, 0.0, 300.0, (20.0,), 300.0, 300.0),
        Generator(2, 3, 0.0, 30.0, (90.0,), 30.0, 30.0),
    )
    cfg = PlanningConfig(
        stages=stages,
        load_growth=(0.0,) * stages,
        rps_alpha=0.0,
        hourly_shed_gamma=0.0,
        annual_shed_phi=0.0,
        unit_commitment=False,
        bes_binary=False,
    )
    reps = RepresentativeSet([0.7, 1.0], [0.3, 0.5], [6000.0, 2760.0])
    return PowerSystem(buses, lines, gens, cfg), reps
