import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridplan.clustering import (
    ChronoCluster,
    ChronologicalAgglomeration,
    HourlySeries,
    ReducedDataset,
    RepresentativeSet,
    ctpc,
    error_criterion,
    load_timeseries,
    select_representative_days,
    select_representative_hours,
    ward_dissimilarity,
    write_timeseries,
)
from gridplan.synthetic import synthetic_year


def cluster(start, stop, centroid):
    return ChronoCluster(start, stop, np.asarray(centroid, float), float(stop - start))


def test_ward_identical_centroids():
    assert ward_dissimilarity(cluster(0, 1, [0.3, 0.4]), cluster(1, 2, [0.3, 0.4])) == 0.0


def test_ward_singletons():
    assert ward_dissimilarity(cluster(0, 1, [1, 0]), cluster(1, 2, [0, 1])) == pytest.approx(1.41421, abs=1e-5)


def test_ward_size_factor():
    d = ward_dissimilarity(cluster(0, 3, [2, 0]), cluster(3, 4, [0, 0]))
    assert d == pytest.approx(2.44949, abs=1e-5)


def days_series(day_values):
    """One constant (load, wind) pair per day."""
    rows = np.repeat(np.asarray(day_values, float), 24, axis=0)
    return HourlySeries(rows)


def test_days_identity():
    series = synthetic_year(1, days=5)
    red = select_representative_days(series, 5)
    np.testing.assert_allclose(red.hours, series.values)
    assert red.day_weights.tolist() == [1.0] * 5


def test_constant_series():
    series = HourlySeries(np.full((24 * 6, 2), 0.4))
    red = select_representative_days(series, 2)
    np.testing.assert_allclose(red.hours, 0.4)
    assert red.day_weights.sum() == 6


def test_two_block_days():
    a, b = (0.2, 0.8), (0.9, 0.1)
    red = select_representative_days(days_series([a, a, b, b]), 2)
    assert [(c.start, c.stop) for c in red.day_clusters] == [(0, 2), (2, 4)]
    np.testing.assert_allclose(red.hours[:24], np.tile(a, (24, 1)))
    np.testing.assert_allclose(red.hours[24:], np.tile(b, (24, 1)))


def test_day_target_out_of_range():
    with pytest.raises(ValueError):
        select_representative_days(synthetic_year(0, days=3), 4)
    with pytest.raises(ValueError):
        select_representative_days(synthetic_year(0, days=3), 0)


def test_hours_identity_and_full_merge():
    hours = np.array([[0.2, 0.4], [0.6, 0.8]])
    red = ReducedDataset(hours, np.array([3.0, 3.0]), ())
    same = select_representative_hours(red, 2)
    np.testing.assert_allclose(np.c_[same.load, same.wind], hours)
    one = select_representative_hours(red, 1)
    np.testing.assert_allclose([one.load[0], one.wind[0]], [0.4, 0.6])
    assert one.weight[0] == 6.0
    with pytest.raises(ValueError):
        select_representative_hours(red, 3)


def test_error_criterion_examples():
    series = synthetic_year(2, days=2)
    full = RepresentativeSet(series.load, series.wind, np.ones(48))
    assert error_criterion(series, full) == (0.0, 0.0)
    alt = HourlySeries(np.tile([[0.0, 0.0], [1.0, 1.0]], (24, 1)))
    ec = error_criterion(alt, RepresentativeSet([0.5], [0.5], [48]))
    assert ec == pytest.approx((0.5, 0.5))


def brute_ec(values, reps):
    return float(np.mean([min(abs(v - r) for r in reps) for v in values]))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_error_criterion_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    series = HourlySeries(rng.uniform(0, 1, (48, 2)))
    reps = RepresentativeSet(rng.uniform(0, 1, 5), rng.uniform(0, 1, 5), np.ones(5))
    ec = error_criterion(series, reps)
    assert ec[0] == pytest.approx(brute_ec(series.load, reps.load))
    assert ec[1] == pytest.approx(brute_ec(series.wind, reps.wind))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 10), st.integers(1, 40))
def test_ctpc_invariants(seed, n_days, n_hours):
    rng = np.random.default_rng(seed)
    series = HourlySeries(rng.uniform(0, 1, (24 * 10, 2)))
    n_hours = min(n_hours, n_days * 24)
    reps = ctpc(series, n_days, n_hours)
    assert len(reps) == n_hours
    assert reps.weight.sum() == 240
    mean = (reps.weight @ np.c_[reps.load, reps.wind]) / reps.weight.sum()
    np.testing.assert_allclose(mean, series.values.mean(axis=0), atol=1e-9)
    for col, raw in ((reps.load, series.load), (reps.wind, series.wind)):
        assert raw.min() - 1e-12 <= col.min() and col.max() <= raw.max() + 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_merges_stay_contiguous(seed):
    rng = np.random.default_rng(seed)
    agg = ChronologicalAgglomeration(rng.uniform(0, 1, (30, 2)))
    for _ in agg.trajectory(1):
        clusters = agg.clusters()
        assert clusters[0].start == 0 and clusters[-1].stop == 30
        assert all(a.stop == b.start for a, b in zip(clusters, clusters[1:]))
        assert sum(c.size for c in clusters) == 30


def test_merge_picks_closest_adjacent_pair_leftmost_tie():
    pts = np.array([[0.0], [1.0], [2.0], [2.5], [3.0]])
    agg = ChronologicalAgglomeration(pts)
    assert agg.merge_once() == 2  # distance 0.5 twice, leftmost wins
    agg = ChronologicalAgglomeration(np.array([[0.0], [1.0], [2.0]]))
    assert agg.merge_once() == 0


def test_brute_force_first_merge():
    rng = np.random.default_rng(4)
    pts = rng.uniform(0, 1, (8, 3))
    d = [np.sqrt(2 * 1 * 1 / 2) * np.linalg.norm(pts[k] - pts[k + 1]) for k in range(7)]
    agg = ChronologicalAgglomeration(pts)
    assert agg.merge_once() == int(np.argmin(d))


def test_timeseries_round_trip(tmp_path):
    series = synthetic_year(3, days=2)
    write_timeseries(series, tmp_path / "h.csv")
    again = load_timeseries(tmp_path / "h.csv")
    np.testing.assert_allclose(again.values, series.values, atol=1e-6)


def test_timeseries_header_checked(tmp_path):
    (tmp_path / "h.csv").write_text("t,a,b\n1,0.5,0.5\n")
    with pytest.raises(ValueError, match="header"):
        load_timeseries(tmp_path / "h.csv")


def test_series_validation():
    with pytest.raises(ValueError):
        HourlySeries(np.full((25, 2), 0.5))
    with pytest.raises(ValueError):
        HourlySeries(np.full((24, 2), 1.5))


def test_representative_csv_round_trip(tmp_path):
    reps = RepresentativeSet([0.5, 0.7], [0.2, 0.3], [4000, 4760])
    reps.write_csv(tmp_path / "r.csv")
    assert (tmp_path / "r.csv").read_text().splitlines()[0] == "rep,load_pu,wind_pu,weight"
    again = RepresentativeSet.read_csv(tmp_path / "r.csv")
    np.testing.assert_allclose(again.weight, reps.weight)


def test_four_day_exhaustive_merge_sequences():
    # with days (A, A, B, B) every adjacent merge order reaching two clusters is worse than {1,2},{3,4}
    a, b = np.array([0.2, 0.8]), np.array([0.9, 0.1])
    days = [a, a, b, b]
    best = None
    for cut in range(1, 4):
        left, right = days[:cut], days[cut:]
        sse = sum(((np.array(g) - np.mean(g, axis=0)) ** 2).sum() for g in (left, right))
        if best is None or sse < best[0]:
            best = (sse, cut)
    assert best[1] == 2
    red = select_representative_days(days_series(days), 2)
    assert red.day_clusters[0].stop == 2
    assert list(itertools.chain.from_iterable(c.member_range for c in red.day_clusters)) == [0, 1, 2, 3]
