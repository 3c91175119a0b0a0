from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import stats

from exit_statistics import (
    EXIT_RATIO_BAND,
    InsufficientSample,
    _merge_bins,
    conditional_mean_exit_time,
    conditional_means_report,
    contingency_table,
    exit_place_distribution,
    exit_ratio_trend,
    independence_test,
    inner_exit_report,
    inner_section_ensemble,
    ks_critical,
    ks_exponential,
    mean_exit_time,
    place_report,
    rescale_edge_times,
    shrinking_trend,
    synthetic_ensemble,
    wilson_interval,
)
from reflected_sde import CENSORED, EXITED, CycleEvent, ExitRecord

LEVELS = {1: 1.0, 2: 1.0, 3: 2.0}


def exponential_quantiles(n: int, mean: float = 1.0) -> np.ndarray:
    """Exact exponential quantile grid: a sample with no sampling noise."""
    u = (np.arange(n) + 0.5) / n
    return -mean * np.log1p(-u)


@pytest.fixture
def independent():
    """2000 exits, edges 1, 2, 3, 2 repeating over sorted times (exactly 1:2:1)."""
    times = exponential_quantiles(2000, mean=2.0)
    pattern = [1, 2, 3, 2]
    edges = [pattern[i % 4] for i in range(2000)]
    return synthetic_ensemble(times, edges, LEVELS)


def test_synthetic_ensemble_shape(independent):
    assert independent.size == 2000
    assert independent.censored == 0
    assert independent.edges == [1, 2, 3]
    frame = independent.to_frame()
    assert list(frame.columns) == ["trajectory", "status", "exit_time", "exit_edge", "cycles", "steps"]


def test_exit_place_distribution(independent):
    dist = exit_place_distribution(independent)
    assert dist[1].count == 500
    assert dist[2].count == 1000
    assert dist[3].count == 500
    assert dist[2].frequency == pytest.approx(0.5)
    for f in dist.values():
        assert f.low < f.frequency < f.high


def test_wilson_interval_bounds():
    lo, hi = wilson_interval(0, 200)
    assert lo == pytest.approx(0.0, abs=1e-12)
    assert 0.0 < hi < 0.05
    lo, hi = wilson_interval(100, 200)
    assert lo < 0.5 < hi


def test_place_report_pass_and_fail(independent):
    good = place_report(independent, {1: 0.25, 2: 0.5, 3: 0.25})
    assert good.passed
    assert good.statistic == pytest.approx(0.0)
    bad = place_report(independent, {1: 0.5, 2: 0.25, 3: 0.25})
    assert not bad.passed
    assert "1" in bad.notes and "2" in bad.notes


def test_insufficient_sample():
    ens = synthetic_ensemble([1.0] * 50, [1] * 50, LEVELS)
    with pytest.raises(InsufficientSample):
        exit_place_distribution(ens)
    with pytest.raises(InsufficientSample):
        mean_exit_time(ens)
    empty = synthetic_ensemble([], [], LEVELS)
    with pytest.raises(InsufficientSample, match="no uncensored"):
        mean_exit_time(empty)


def test_mean_exit_time(independent):
    mean, se = mean_exit_time(independent)
    assert mean == pytest.approx(2.0, rel=0.01)
    assert se == pytest.approx(2.0 / math.sqrt(2000), rel=0.05)


def test_conditional_mean_requires_samples(independent):
    mean, _ = conditional_mean_exit_time(independent, 2)
    assert mean == pytest.approx(2.0, rel=0.02)
    few = synthetic_ensemble([1.0] * 120, [1] * 100 + [2] * 20, LEVELS)
    with pytest.raises(InsufficientSample):
        conditional_mean_exit_time(few, 2)


def test_censored_records_are_excluded_but_counted(independent):
    extra = [ExitRecord(CENSORED, 7.0, None, None, None, 0, 100, 9000 + i) for i in range(20)]
    ens = type(independent).from_records(list(independent.records) + extra, 1.0, 1, LEVELS)
    assert ens.censored == 20
    assert ens.censoring_rate == pytest.approx(20 / 2020)
    assert len(ens.times()) == 2000
    assert mean_exit_time(ens)[0] == pytest.approx(mean_exit_time(independent)[0])
    assert place_report(ens, {1: 0.25, 2: 0.5, 3: 0.25}).censored == 20


def test_ks_exponential_pass(independent):
    rep = ks_exponential(independent, 2.0)
    assert rep.passed
    assert rep.statistic < 1e-3
    assert rep.threshold == pytest.approx(ks_critical(2000))
    assert rep.sample_size == 2000


def test_ks_exponential_wrong_mean_fails(independent):
    rep = ks_exponential(independent, 4.0)
    assert not rep.passed
    assert rep.verdict == "fail"


def test_ks_critical_value():
    assert ks_critical(10_000) == pytest.approx(1.6276 / 100.0, rel=1e-3)


def test_ks_rejects_nonpositive_mean(independent):
    with pytest.raises(ValueError):
        ks_exponential(independent, 0.0)


def test_contingency_table_counts(independent):
    table = contingency_table(independent.exit_edges(), independent.times(), [1, 2, 3])
    assert table.shape == (3, 4)
    assert table.sum() == 2000
    np.testing.assert_allclose(table[1], [250, 250, 250, 250])


def test_independence_pass(independent):
    rep = independence_test(independent)
    assert rep.passed
    assert rep.p_value > 0.5


def test_independence_fails_when_one_edge_is_slow(independent):
    slow = rescale_edge_times(independent, 3, 3.0)
    rep = independence_test(slow)
    assert not rep.passed
    assert rep.p_value < 1e-6


def test_independence_needs_two_edges():
    ens = synthetic_ensemble(exponential_quantiles(600), [1] * 600, LEVELS)
    with pytest.raises(InsufficientSample):
        independence_test(ens)


def test_conditional_means_pass(independent):
    rep = conditional_means_report(independent)
    assert rep.passed
    assert set(rep.extra["conditional"]) == {1, 2, 3}


def test_conditional_means_fail(independent):
    rep = conditional_means_report(rescale_edge_times(independent, 3, 3.0))
    assert not rep.passed
    assert rep.statistic > 3.0


def test_report_rows():
    ens = synthetic_ensemble(exponential_quantiles(600), [1, 2] * 300, {1: 1.0, 2: 1.0})
    row = ks_exponential(ens, 1.0).as_row()
    assert set(row) == {"name", "n", "censored", "statistic", "threshold", "p_value", "verdict", "notes"}
    assert row["name"] == "ks_exponential"
    assert row["verdict"] == "pass"


def test_merge_bins_folds_sparse_last_column_left():
    table = np.array([[50.0, 50.0, 50.0, 2.0], [50.0, 50.0, 50.0, 1.0]])
    merged = _merge_bins(table.copy())
    np.testing.assert_array_equal(merged, [[50, 50, 52], [50, 50, 51]])


def test_merge_bins_folds_sparse_first_column_right():
    table = np.array([[1.0, 50.0, 50.0], [2.0, 50.0, 50.0]])
    merged = _merge_bins(table.copy())
    np.testing.assert_array_equal(merged, [[51, 50], [52, 50]])
    assert merged.sum() == table.sum()


# -- inner section -----------------------------------------------------------

def test_inner_section_ensemble_takes_first_hit():
    delta = 0.3
    logs = [
        (
            ExitRecord(EXITED, 2.0, 1, 1, None, 2, 900, 0),
            [
                CycleEvent("tau", 0.3, 2, delta),
                CycleEvent("sigma_return", 0.5, 2, 0.1),
                CycleEvent("tau", 0.8, 1, delta),
                CycleEvent("sigma_exit", 2.0, 1, 1.0),
            ],
        ),
        (ExitRecord(CENSORED, 5.0, None, None, None, 1, 1000, 1), [CycleEvent("tau", 1.1, 3, delta)]),
        (ExitRecord(CENSORED, 5.0, None, None, None, 0, 1000, 2), []),
    ]
    ens = inner_section_ensemble(logs, 0.02, 1, [1, 2, 3], delta)
    assert ens.size == 3
    assert ens.censored == 1
    assert ens.levels == {1: delta, 2: delta, 3: delta}
    np.testing.assert_array_equal(ens.exit_edges(), [2, 3])
    np.testing.assert_allclose(ens.times(), [0.3, 1.1])
    assert [r.trajectory for r in ens.records] == [0, 1, 2]


def test_inner_exit_report(independent):
    rep = inner_exit_report(independent, {1: 0.25, 2: 0.5, 3: 0.25}, 2.0)
    assert rep.name == "inner_exit_place"
    assert rep.passed
    assert rep.extra["ratio"] == pytest.approx(1.0, rel=0.01)
    assert "limit 2" in rep.notes
    bad = inner_exit_report(independent, {1: 0.5, 2: 0.25, 3: 0.25}, 2.0)
    assert not bad.passed
    assert bad.notes.startswith("outside interval")


# -- trends across epsilon ---------------------------------------------------

def test_exit_ratio_trend_pass():
    rep = exit_ratio_trend({0.04: 1.2, 0.02: 1.08})
    assert rep.passed
    assert rep.statistic == pytest.approx(0.08)
    assert rep.threshold == pytest.approx(0.2)
    assert rep.sample_size == 2


@pytest.mark.parametrize(
    "ratios",
    [
        {0.04: 1.1, 0.02: 1.15},  # moving away from 1
        {0.04: 1.0 + EXIT_RATIO_BAND + 0.1, 0.02: 1.0},  # outside the band at the coarse width
        {0.04: 0.9, 0.02: 1.1},  # equally far
    ],
)
def test_exit_ratio_trend_fail(ratios):
    assert not exit_ratio_trend(ratios).passed


def test_trends_need_two_epsilons():
    with pytest.raises(InsufficientSample):
        exit_ratio_trend({0.04: 1.0})
    with pytest.raises(InsufficientSample):
        shrinking_trend("ks_trend", {0.04: 0.02, 0.02: math.nan})


def test_shrinking_trend_compares_extreme_epsilons():
    rep = shrinking_trend("localization_trend:s=1", {0.01: 0.03, 0.04: 0.05, 0.02: 0.09})
    assert rep.passed
    assert (rep.statistic, rep.threshold) == (0.03, 0.05)
    assert rep.as_row()["name"] == "localization_trend:s=1"
    assert not shrinking_trend("ks_trend", {0.01: 0.05, 0.04: 0.03}).passed


# -- oracles -----------------------------------------------------------------

def test_ks_statistic_matches_brute_force_ecdf():
    rng = np.random.default_rng(3)
    times = rng.exponential(1.3, 600)
    ens = synthetic_ensemble(times, [1] * 600, {1: 1.0})
    model = 1.0 - np.exp(-times / 1.3)
    at_or_below = (times[None, :] <= times[:, None]).sum(axis=1) / 600
    strictly_below = (times[None, :] < times[:, None]).sum(axis=1) / 600
    brute = max(np.abs(at_or_below - model).max(), np.abs(strictly_below - model).max())
    assert ks_exponential(ens, 1.3).statistic == pytest.approx(brute, abs=1e-12)


@pytest.mark.parametrize("p", [0.2, 0.35, 0.5])
def test_wilson_interval_coverage(p):
    n = 400
    counts = np.arange(n + 1)
    covered = np.array([lo <= p <= hi for lo, hi in (wilson_interval(c, n) for c in counts)])
    coverage = stats.binom.pmf(counts, n, p)[covered].sum()
    assert coverage >= 0.985
