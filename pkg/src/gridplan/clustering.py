"""Chronological time-period clustering of joint load/wind series.

Two agglomerative passes, each merging only temporally adjacent clusters
with Ward's criterion:

1. days, described by 48-vectors (24 hourly load values, 24 wind values),
   are merged down to ``D`` day-clusters whose centroids form a reduced
   chronological dataset of ``D * 24`` hours weighted by days-per-cluster;
2. the reduced hours, described by (load, wind) pairs, are merged down to
   ``H`` representative hours.

The weight of a representative hour is the total day-weight of its member
hours, so the weights of a full year sum to 8760.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np


@dataclass(frozen=True)
class HourlySeries:
    """Per-unit load and wind factors, one row per hour."""

    values: np.ndarray
    year: str = ""

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] != 2:
            raise ValueError("series must have shape (hours, 2)")
        if values.shape[0] == 0 or values.shape[0] % 24:
            raise ValueError(f"hour count {values.shape[0]} is not a positive multiple of 24")
        if not np.all((values >= 0) & (values <= 1)):
            raise ValueError("per-unit values must lie in [0, 1]")
        object.__setattr__(self, "values", values)

    @property
    def load(self) -> np.ndarray:
        return self.values[:, 0]

    @property
    def wind(self) -> np.ndarray:
        return self.values[:, 1]

    @property
    def n_days(self) -> int:
        return self.values.shape[0] // 24

    def day_vectors(self) -> np.ndarray:
        """(days, 48) matrix: 24 load values followed by 24 wind values."""
        load = self.load.reshape(self.n_days, 24)
        wind = self.wind.reshape(self.n_days, 24)
        return np.hstack([load, wind])


@dataclass(frozen=True)
class ChronoCluster:
    start: int
    stop: int
    centroid: np.ndarray
    weight: float

    @property
    def member_range(self) -> range:
        return range(self.start, self.stop)

    @property
    def size(self) -> int:
        return self.stop - self.start


@dataclass(frozen=True)
class ReducedDataset:
    """Output of the day pass: chronological hours carrying day weights."""

    hours: np.ndarray  # (D*24, 2)
    hour_weights: np.ndarray  # (D*24,)
    day_clusters: tuple[ChronoCluster, ...]

    @property
    def day_weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.day_clusters])


@dataclass(frozen=True)
class RepresentativeSet:
    load: np.ndarray
    wind: np.ndarray
    weight: np.ndarray
    source: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("load", "wind", "weight"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).ravel())
        if not (self.load.size == self.wind.size == self.weight.size) or self.load.size == 0:
            raise ValueError("load, wind and weight must be nonempty and equally long")
        if np.any(self.weight < 0):
            raise ValueError("negative representative weight")
        for arr in (self.load, self.wind):
            if np.any(arr < -1e-12) or np.any(arr > 1 + 1e-12):
                raise ValueError("representative factors must lie in [0, 1]")

    def __len__(self) -> int:
        return self.load.size

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["rep", "load_pu", "wind_pu", "weight"])
            for k in range(len(self)):
                w.writerow([k + 1, f"{self.load[k]:.10f}", f"{self.wind[k]:.10f}", f"{self.weight[k]:.10f}"])

    @classmethod
    def read_csv(cls, path: str | Path) -> "RepresentativeSet":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls(
            [float(r["load_pu"]) for r in rows],
            [float(r["wind_pu"]) for r in rows],
            [float(r["weight"]) for r in rows],
            {"file": str(path)},
        )


def load_timeseries(path: str | Path, year: str = "") -> HourlySeries:
    """Read a ``hour,load_pu,wind_pu`` CSV."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["hour", "load_pu", "wind_pu"]:
            raise ValueError(f"{path}: expected header 'hour,load_pu,wind_pu', got {header}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            try:
                rows.append((float(row[1]), float(row[2])))
            except (IndexError, ValueError):
                raise ValueError(f"{path}:{lineno}: malformed row {row}") from None
    return HourlySeries(np.array(rows), year)


def write_timeseries(series: HourlySeries, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["hour", "load_pu", "wind_pu"])
        for k, (load, wind) in enumerate(series.values, start=1):
            w.writerow([k, f"{load:.6f}", f"{wind:.6f}"])


def ward_dissimilarity(c1: ChronoCluster, c2: ChronoCluster) -> float:
    n1, n2 = c1.size, c2.size
    return float(np.sqrt(2.0 * n1 * n2 / (n1 + n2)) * np.linalg.norm(c1.centroid - c2.centroid))


class ChronologicalAgglomeration:
    """Adjacent-only Ward agglomeration over a chronological point sequence.

    ``weights`` scale each point's contribution to its cluster centroid; the
    Ward size factor uses member counts. Ties in the minimum dissimilarity go
    to the leftmost pair.
    """

    def __init__(self, points: np.ndarray, weights: np.ndarray | None = None):
        points = np.asarray(points, dtype=float)
        n = points.shape[0]
        w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
        self.starts = np.arange(n)
        self.counts = np.ones(n)
        self.wsum = points * w[:, None]
        self.wtot = w.copy()
        self.n_points = n
        self._dist = self._adjacent(np.arange(n - 1))

    def __len__(self) -> int:
        return self.starts.size

    @property
    def centroids(self) -> np.ndarray:
        return self.wsum / self.wtot[:, None]

    def _adjacent(self, left: np.ndarray) -> np.ndarray:
        if left.size == 0:
            return np.zeros(0)
        n1, n2 = self.counts[left], self.counts[left + 1]
        c = self.centroids
        diff = np.linalg.norm(c[left] - c[left + 1], axis=1)
        return np.sqrt(2.0 * n1 * n2 / (n1 + n2)) * diff

    def merge_once(self) -> int:
        """Merge the closest adjacent pair; returns the left cluster index."""
        if len(self) < 2:
            raise ValueError("nothing left to merge")
        k = int(np.argmin(self._dist))
        self.counts[k] += self.counts[k + 1]
        self.wsum[k] += self.wsum[k + 1]
        self.wtot[k] += self.wtot[k + 1]
        self.starts = np.delete(self.starts, k + 1)
        self.counts = np.delete(self.counts, k + 1)
        self.wsum = np.delete(self.wsum, k + 1, axis=0)
        self.wtot = np.delete(self.wtot, k + 1)
        self._dist = np.delete(self._dist, k)
        touched = np.array([j for j in (k - 1, k) if 0 <= j < len(self) - 1], dtype=int)
        self._dist[touched] = self._adjacent(touched)
        return k

    def run_to(self, target: int) -> None:
        while len(self) > target:
            self.merge_once()

    def trajectory(self, target: int = 1) -> Iterator[int]:
        """Merge down to ``target`` clusters, yielding the count after each merge."""
        while len(self) > target:
            self.merge_once()
            yield len(self)

    def clusters(self) -> list[ChronoCluster]:
        stops = np.append(self.starts[1:], self.n_points)
        cents = self.centroids
        return [
            ChronoCluster(int(a), int(b), cents[k].copy(), float(self.counts[k]))
            for k, (a, b) in enumerate(zip(self.starts, stops))
        ]

    def representatives(self) -> tuple[np.ndarray, np.ndarray]:
        return self.centroids.copy(), self.wtot.copy()


def select_representative_days(series: HourlySeries, n_days: int) -> ReducedDataset:
    total = series.n_days
    if not 1 <= n_days <= total:
        raise ValueError(f"day target {n_days} outside [1, {total}]")
    agg = ChronologicalAgglomeration(series.day_vectors())
    agg.run_to(n_days)
    clusters = agg.clusters()
    cents = agg.centroids
    hours = np.stack([cents[:, :24].ravel(), cents[:, 24:].ravel()], axis=1)
    weights = np.repeat([c.weight for c in clusters], 24)
    return ReducedDataset(hours, weights, tuple(clusters))


def select_representative_hours(reduced: ReducedDataset, n_hours: int) -> RepresentativeSet:
    total = reduced.hours.shape[0]
    if not 1 <= n_hours <= total:
        raise ValueError(f"hour target {n_hours} outside [1, {total}]")
    agg = ChronologicalAgglomeration(reduced.hours, reduced.hour_weights)
    agg.run_to(n_hours)
    cents, weights = agg.representatives()
    return RepresentativeSet(
        np.clip(cents[:, 0], 0, 1),
        np.clip(cents[:, 1], 0, 1),
        weights,
        {"days": len(reduced.day_clusters), "hours": n_hours},
    )


def ctpc(series: HourlySeries, n_days: int, n_hours: int) -> RepresentativeSet:
    reps = select_representative_hours(select_representative_days(series, n_days), n_hours)
    return RepresentativeSet(reps.load, reps.wind, reps.weight, {**reps.source, "year": series.year})


def error_criterion(real: HourlySeries, reps: RepresentativeSet) -> tuple[float, float]:
    """Mean distance from each real hour to its nearest representative, per feature."""
    if len(reps) == 0:
        raise ValueError("empty representative set")
    return _nearest_mean(real.load, reps.load), _nearest_mean(real.wind, reps.wind)


def _nearest_mean(data: np.ndarray, reps: np.ndarray) -> float:
    ref = np.sort(reps)
    pos = np.searchsorted(ref, data)
    lo = ref[np.clip(pos - 1, 0, ref.size - 1)]
    hi = ref[np.clip(pos, 0, ref.size - 1)]
    return float(np.mean(np.minimum(np.abs(data - lo), np.abs(data - hi))))
