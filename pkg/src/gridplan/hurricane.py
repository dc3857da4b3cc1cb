"""Hurricane speed scenarios, line fragility and resilience contingencies.

Pipeline: sample wind speeds, reduce them to a few weighted scenarios by
backward reduction under the Kantorovich (1-D transport) distance, then for
each speed pick the hurricane-zone lines whose failure probability exceeds
the 1% background rate, enumerate every outage combination, keep the
probable ones and rank them by a risk index built from load shedding.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .system import Line, PowerSystem

BACKGROUND_FAILURE_RATE = 0.01
PROBABLE_SHARE = 0.2
RRI_SHARE = 0.2
DEFAULT_MAX_VULNERABLE = 12


@dataclass(frozen=True)
class FragilityCurve:
    """Monotone piecewise-linear map from wind speed (m/s) to failure probability."""

    speeds: tuple[float, ...]
    probabilities: tuple[float, ...]

    def __post_init__(self) -> None:
        s = np.asarray(self.speeds, dtype=float)
        p = np.asarray(self.probabilities, dtype=float)
        if s.size < 2 or s.size != p.size:
            raise ValueError("fragility curve needs at least two (speed, probability) breakpoints")
        if np.any(np.diff(s) <= 0):
            raise ValueError("breakpoint speeds must be strictly increasing")
        if np.any(p < 0) or np.any(p > 1) or np.any(np.diff(p) < 0):
            raise ValueError("probabilities must be nondecreasing within [0, 1]")

    @classmethod
    def linear(cls, onset: float, full: float) -> "FragilityCurve":
        return cls((onset, full), (0.0, 1.0))

    def __call__(self, speed: float) -> float:
        return float(np.interp(speed, self.speeds, self.probabilities))

    def to_dict(self) -> dict:
        return {"speeds": list(self.speeds), "probabilities": list(self.probabilities)}


# placeholder shapes: line curve 30->60 m/s, tower curve 35->70 m/s
DEFAULT_LINE_CURVE = FragilityCurve.linear(30.0, 60.0)
DEFAULT_TOWER_CURVE = FragilityCurve.linear(35.0, 70.0)


@dataclass(frozen=True)
class HurricaneSpeedScenario:
    speed: float
    probability: float


@dataclass(frozen=True)
class FailureScenario:
    states: tuple[int, ...]  # 1 = failed, aligned with ``lines``
    lines: tuple[int, ...]  # vulnerable line ids
    probability: float
    speed: HurricaneSpeedScenario | None = None

    @property
    def failed(self) -> frozenset[int]:
        return frozenset(l for l, x in zip(self.lines, self.states) if x)


@dataclass
class ResilienceContingency:
    scenario: FailureScenario
    rri: float
    normalized: float = 0.0
    selected: bool = False
    shed: float = 0.0


@dataclass(frozen=True)
class SpeedDistribution:
    """``family`` is ``weibull`` (shape, scale), ``lognormal`` (mean, sigma of log) or ``point`` (value)."""

    family: str = "weibull"
    params: dict = field(default_factory=lambda: {"shape": 2.0, "scale": 45.0})

    def validate(self) -> None:
        p = self.params
        if self.family == "weibull":
            if not (p.get("shape", 0) > 0 and p.get("scale", 0) > 0):
                raise ValueError("weibull needs positive shape and scale")
        elif self.family == "lognormal":
            if not p.get("sigma", -1) >= 0 or "mean" not in p:
                raise ValueError("lognormal needs mean and sigma >= 0")
        elif self.family == "point":
            if not p.get("value", -1) >= 0:
                raise ValueError("point mass needs a nonnegative value")
        else:
            raise ValueError(f"unknown speed distribution {self.family!r}")


def sample_hurricane_speeds(dist: SpeedDistribution, n: int, seed: int) -> np.ndarray:
    if n < 1:
        raise ValueError("sample count must be >= 1")
    dist.validate()
    rng = np.random.default_rng(seed)
    p = dist.params
    if dist.family == "weibull":
        return p["scale"] * rng.weibull(p["shape"], n)
    if dist.family == "lognormal":
        return rng.lognormal(p["mean"], p["sigma"], n)
    return np.full(n, float(p["value"]))


def reduce_scenarios(samples: Sequence[float], k: int, weights: Sequence[float] | None = None) -> list[HurricaneSpeedScenario]:
    """Backward reduction of equiprobable samples to ``k`` speed scenarios.

    Each step deletes the scenario with the least probability-weighted
    distance to its nearest survivor and hands its probability to that
    survivor. In one dimension the nearest survivor is a sorted neighbour.
    """
    if k < 1:
        raise ValueError("target scenario count must be >= 1")
    x = np.asarray(samples, dtype=float)
    w = np.ones(x.size) if weights is None else np.asarray(weights, dtype=float)
    values, inverse = np.unique(x, return_inverse=True)
    prob = np.bincount(inverse, weights=w) / w.sum()
    if k > values.size:
        raise ValueError(f"target {k} exceeds {values.size} distinct samples")
    while values.size > k:
        gaps = np.diff(values)
        left = np.append(np.inf, gaps)
        right = np.append(gaps, np.inf)
        nearest = np.minimum(left, right)
        cost = prob * nearest
        j = int(np.argmin(cost))
        to = j - 1 if left[j] <= right[j] else j + 1
        prob[to] += prob[j]
        values = np.delete(values, j)
        prob = np.delete(prob, j)
    prob = prob / prob.sum()
    return [HurricaneSpeedScenario(float(v), float(p)) for v, p in zip(values, prob)]


def tower_count(length_km: float, spacing_m: float) -> int:
    return max(1, math.ceil(length_km * 1000.0 / spacing_m - 1e-9))


def line_failure_probability(fp_line: float, fp_tower: float, towers: int) -> float:
    """A line fails by direct outage or by the collapse of any of its towers."""
    if towers < 1:
        raise ValueError("tower count must be >= 1")
    towers_fail = 1.0 - (1.0 - fp_tower) ** towers
    return fp_line + towers_fail - fp_line * towers_fail


def hurricane_zone_lines(system: PowerSystem, built: Iterable[int] = ()) -> list[Line]:
    """Existing hurricane-zone lines plus candidates listed in ``built``."""
    built = set(built)
    return [
        ln
        for ln in system.lines
        if ln.in_hurricane_zone and (ln.kind == "existing" or ln.id in built)
    ]


def select_vulnerable_lines(
    lines: Sequence[Line],
    speed: float,
    line_curve: FragilityCurve = DEFAULT_LINE_CURVE,
    tower_curve: FragilityCurve = DEFAULT_TOWER_CURVE,
    tower_spacing: float = 500.0,
) -> list[tuple[Line, float]]:
    out = []
    fp_l, fp_t = line_curve(speed), tower_curve(speed)
    for ln in lines:
        lf = line_failure_probability(fp_l, fp_t, tower_count(ln.length, tower_spacing))
        if lf > BACKGROUND_FAILURE_RATE:
            out.append((ln, lf))
    out.sort(key=lambda item: (-item[1], item[0].id))
    return out


def enumerate_failure_scenarios(
    vulnerable: Sequence[tuple[Line, float]],
    speed: HurricaneSpeedScenario | None = None,
    cap: int = DEFAULT_MAX_VULNERABLE,
) -> list[FailureScenario]:
    m = len(vulnerable)
    if m > cap:
        raise ValueError(
            f"{m} vulnerable lines exceed the enumeration cap of {cap}; "
            "tighten the failure-probability threshold or raise the cap"
        )
    ids = tuple(ln.id for ln, _ in vulnerable)
    lf = np.array([p for _, p in vulnerable])
    out = []
    for states in itertools.product((0, 1), repeat=m):
        x = np.array(states)
        prob = float(np.prod(np.where(x == 1, lf, 1.0 - lf))) if m else 1.0
        out.append(FailureScenario(tuple(states), ids, prob, speed))
    return out


def filter_probable(scenarios: Sequence[FailureScenario], share: float = PROBABLE_SHARE) -> list[FailureScenario]:
    if not scenarios:
        raise ValueError("no scenarios to filter")
    top = max(s.probability for s in scenarios)
    return [s for s in scenarios if s.probability > share * top]


def resilience_risk_index(speed_probability: float, scenario_probability: float, total_shed: float) -> float:
    if total_shed < 0:
        raise ValueError("load shedding cannot be negative")
    return speed_probability * scenario_probability * total_shed


def rank_contingencies(
    scenarios: Sequence[FailureScenario],
    shed: Callable[[FailureScenario], float],
    share: float = RRI_SHARE,
) -> list[ResilienceContingency]:
    """Score each scenario, normalise by the largest index, flag those above ``share``."""
    out = []
    for sc in scenarios:
        hp = sc.speed.probability if sc.speed is not None else 1.0
        amount = shed(sc)
        out.append(ResilienceContingency(sc, resilience_risk_index(hp, sc.probability, amount), shed=amount))
    top = max((c.rri for c in out), default=0.0)
    for c in out:
        c.normalized = c.rri / top if top > 0 else 0.0
        c.selected = c.normalized > share
    return out


@dataclass
class HurricaneModel:
    """Speed scenarios plus fragility data; derives candidate RCs for a build."""

    speeds: list[HurricaneSpeedScenario]
    line_curve: FragilityCurve = DEFAULT_LINE_CURVE
    tower_curve: FragilityCurve = DEFAULT_TOWER_CURVE
    tower_spacing: float = 500.0
    cap: int = DEFAULT_MAX_VULNERABLE

    @classmethod
    def from_sampling(
        cls,
        dist: SpeedDistribution,
        n_samples: int,
        n_scenarios: int,
        seed: int,
        **kwargs,
    ) -> "HurricaneModel":
        samples = sample_hurricane_speeds(dist, n_samples, seed)
        k = min(n_scenarios, np.unique(samples).size)
        return cls(reduce_scenarios(samples, k), **kwargs)

    def probable_scenarios(self, system: PowerSystem, built: Iterable[int] = ()) -> list[FailureScenario]:
        zone = hurricane_zone_lines(system, built)
        pool: list[FailureScenario] = []
        for hs in self.speeds:
            vuln = select_vulnerable_lines(zone, hs.speed, self.line_curve, self.tower_curve, self.tower_spacing)
            pool.extend(enumerate_failure_scenarios(vuln, hs, self.cap))
        return filter_probable(pool) if pool else []
