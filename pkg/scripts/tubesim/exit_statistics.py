# -*- coding: utf-8 -*-

# exit_statistics.py
"""
Estimators and goodness-of-fit verdicts over ensembles of exit records.

Censored and aborted records never enter a statistic; their count is carried
into every report so a reader can judge the ensemble.

Public API:
    ExitEnsemble.from_records(...)
    exit_place_distribution(ens)        -> dict[edge, EdgeFrequency]
    mean_exit_time(ens)                 -> (mean, se)
    conditional_mean_exit_time(ens, k)  -> (mean, se)
    ks_exponential(ens, mean)           -> TestReport
    independence_test(ens)              -> TestReport
    place_report(ens, target)           -> TestReport
    conditional_means_report(ens)       -> TestReport
    inner_section_ensemble(logs, ...)   -> ExitEnsemble
    inner_exit_report(ens, target, mean) -> TestReport
    exit_ratio_trend(ratios)            -> TestReport
    shrinking_trend(name, values)       -> TestReport
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence
import logging
import math

import numpy as np
import pandas as pd
from scipy import stats

from reflected_sde import CENSORED, EXITED, ExitRecord

# ---------------------------------------------------------------------------
# Logging
# ---------------------------------------------------------------------------

logger = logging.getLogger("tubesim.exit_statistics")

# ---------------------------------------------------------------------------
# Policy configuration
# ---------------------------------------------------------------------------

MIN_PLACE_SAMPLE: int = 100
MIN_MEAN_SAMPLE: int = 100
MIN_CONDITIONAL_SAMPLE: int = 50
MIN_LAW_SAMPLE: int = 500

# Two-sided confidence of every interval and critical value.
CONFIDENCE: float = 0.99

# Smallest expected cell count before time bins are merged.
MIN_EXPECTED_COUNT: float = 5.0

# Pass rule of the independence test.
INDEPENDENCE_ALPHA: float = 0.01

# Conditional means must agree within this many pooled standard errors.
CONDITIONAL_SE_BAND: float = 3.0

# Rescaled mean exit times must stay within this distance of 1.
EXIT_RATIO_BAND: float = 0.25


class InsufficientSample(ValueError):
    """Not enough uncensored records for the requested estimator."""


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExitEnsemble:
    records: tuple[ExitRecord, ...]
    epsilon: float
    vertex: int
    levels: Mapping[int, float]
    delta: float | None = None

    @classmethod
    def from_records(
        cls,
        records: Iterable[ExitRecord],
        epsilon: float,
        vertex: int,
        levels: Mapping[int, float],
        delta: float | None = None,
    ) -> "ExitEnsemble":
        return cls(tuple(records), float(epsilon), int(vertex), dict(levels), delta)

    @property
    def size(self) -> int:
        return len(self.records)

    @property
    def uncensored(self) -> list[ExitRecord]:
        return [r for r in self.records if r.exited]

    @property
    def censored(self) -> int:
        return sum(1 for r in self.records if r.censored)

    @property
    def censoring_rate(self) -> float:
        return self.censored / self.size if self.records else 0.0

    @property
    def edges(self) -> list[int]:
        return sorted(self.levels)

    def times(self) -> np.ndarray:
        return np.array([r.exit_time for r in self.uncensored], dtype=float)

    def exit_edges(self) -> np.ndarray:
        return np.array([r.exit_edge for r in self.uncensored], dtype=int)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "trajectory": [r.trajectory for r in self.records],
                "status": [r.status for r in self.records],
                "exit_time": [r.exit_time for r in self.records],
                "exit_edge": [r.exit_edge for r in self.records],
                "cycles": [r.cycles for r in self.records],
                "steps": [r.steps for r in self.records],
            }
        )


@dataclass(frozen=True)
class EdgeFrequency:
    edge: int
    count: int
    frequency: float
    low: float
    high: float

    def covers(self, p: float) -> bool:
        return self.low <= p <= self.high


@dataclass(frozen=True)
class TestReport:
    name: str
    statistic: float
    threshold: float
    passed: bool
    sample_size: int
    censored: int = 0
    p_value: float | None = None
    notes: str = ""
    extra: dict = field(default_factory=dict)

    __test__ = False  # not a pytest class

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def as_row(self) -> dict:
        return {
            "name": self.name,
            "n": self.sample_size,
            "censored": self.censored,
            "statistic": self.statistic,
            "threshold": self.threshold,
            "p_value": self.p_value if self.p_value is not None else float("nan"),
            "verdict": self.verdict,
            "notes": self.notes,
        }


def _need(n: int, minimum: int, what: str) -> None:
    if n == 0:
        raise InsufficientSample(f"{what}: ensemble has no uncensored records")
    if n < minimum:
        raise InsufficientSample(f"{what}: need at least {minimum} records, got {n}")


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------

def wilson_interval(count: int, n: int, confidence: float = CONFIDENCE) -> tuple[float, float]:
    ci = stats.binomtest(count, n).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def exit_place_distribution(ens: ExitEnsemble) -> dict[int, EdgeFrequency]:
    edges = ens.exit_edges()
    n = len(edges)
    _need(n, MIN_PLACE_SAMPLE, "exit_place_distribution")
    out: dict[int, EdgeFrequency] = {}
    for k in ens.edges:
        count = int(np.count_nonzero(edges == k))
        lo, hi = wilson_interval(count, n)
        out[k] = EdgeFrequency(k, count, count / n, lo, hi)
    return out


def _mean_and_se(times: np.ndarray) -> tuple[float, float]:
    if len(times) < 2:
        return float(times.mean()), 0.0
    return float(times.mean()), float(stats.sem(times))


def mean_exit_time(ens: ExitEnsemble) -> tuple[float, float]:
    times = ens.times()
    _need(len(times), MIN_MEAN_SAMPLE, "mean_exit_time")
    return _mean_and_se(times)


def conditional_mean_exit_time(ens: ExitEnsemble, k: int) -> tuple[float, float]:
    times = ens.times()[ens.exit_edges() == k]
    _need(len(times), MIN_CONDITIONAL_SAMPLE, f"conditional_mean_exit_time(edge {k})")
    return _mean_and_se(times)


# ---------------------------------------------------------------------------
# Tests
# ---------------------------------------------------------------------------

def ks_critical(n: int, confidence: float = CONFIDENCE) -> float:
    """Asymptotic Kolmogorov critical value c_alpha / sqrt(n)."""
    return float(stats.kstwobign.ppf(confidence)) / math.sqrt(n)


def ks_exponential(ens: ExitEnsemble, theoretical_mean: float) -> TestReport:
    if not theoretical_mean > 0.0:
        raise ValueError(f"theoretical mean must be positive, got {theoretical_mean}")
    times = ens.times()
    _need(len(times), MIN_LAW_SAMPLE, "ks_exponential")
    result = stats.kstest(times / theoretical_mean, "expon")
    threshold = ks_critical(len(times))
    return TestReport(
        name="ks_exponential",
        statistic=float(result.statistic),
        threshold=threshold,
        passed=bool(result.statistic < threshold),
        sample_size=len(times),
        censored=ens.censored,
        p_value=float(result.pvalue),
        notes=f"times / {theoretical_mean:.6g} vs 1 - exp(-t)",
    )


def _merge_bins(table: np.ndarray) -> np.ndarray:
    """
    Fold the time column holding the smallest expected count into its left
    neighbour (the first column folds right) until every expected count
    reaches MIN_EXPECTED_COUNT.
    """
    while table.shape[1] > 1:
        expected = stats.contingency.expected_freq(table)
        if expected.min() >= MIN_EXPECTED_COUNT:
            break
        col = int(np.argmin(expected.min(axis=0)))
        into = col - 1 if col > 0 else 1
        table[:, into] += table[:, col]
        table = np.delete(table, col, axis=1)
    return table


def contingency_table(edges: np.ndarray, times: np.ndarray, edge_ids: Sequence[int]) -> np.ndarray:
    """(exit edge) x (pooled time quartile) counts."""
    cuts = np.quantile(times, [0.25, 0.5, 0.75])
    bins = np.searchsorted(cuts, times, side="right")
    table = np.zeros((len(edge_ids), 4), dtype=float)
    for row, k in enumerate(edge_ids):
        mask = edges == k
        table[row] = np.bincount(bins[mask], minlength=4)[:4]
    return table


def independence_test(ens: ExitEnsemble) -> TestReport:
    times = ens.times()
    edges = ens.exit_edges()
    _need(len(times), MIN_LAW_SAMPLE, "independence_test")
    used = [k for k in ens.edges if np.any(edges == k)]
    if len(used) < 2:
        raise InsufficientSample(
            f"independence_test: need exits through at least 2 edges, got {used}"
        )
    table = _merge_bins(contingency_table(edges, times, used))
    if table.shape[1] < 2:
        raise InsufficientSample("independence_test: table degenerates to one time bin")
    chi2, p, dof, _ = stats.chi2_contingency(table, correction=False)
    logger.debug("Independence table %s: chi2=%.4g dof=%d p=%.4g", table.shape, chi2, dof, p)
    return TestReport(
        name="independence",
        statistic=float(chi2),
        threshold=INDEPENDENCE_ALPHA,
        passed=bool(p > INDEPENDENCE_ALPHA),
        sample_size=len(times),
        censored=ens.censored,
        p_value=float(p),
        notes=f"{table.shape[0]}x{table.shape[1]} table",
    )


def place_report(ens: ExitEnsemble, target: Mapping[int, float]) -> TestReport:
    """Pass when every target probability sits inside its Wilson interval."""
    dist = exit_place_distribution(ens)
    misses = [k for k, f in dist.items() if not f.covers(target[k])]
    worst = max(abs(f.frequency - target[k]) for k, f in dist.items())
    return TestReport(
        name="exit_place",
        statistic=worst,
        threshold=float("nan"),
        passed=not misses,
        sample_size=sum(f.count for f in dist.values()),
        censored=ens.censored,
        notes="outside interval: " + ",".join(map(str, misses)) if misses else "",
    )


def conditional_means_report(ens: ExitEnsemble) -> TestReport:
    """Per-edge conditional means pairwise, and against the pooled mean, within 3 pooled SE."""
    mean, se = mean_exit_time(ens)
    conditional: dict[int, tuple[float, float]] = {}
    for k in ens.edges:
        try:
            conditional[k] = conditional_mean_exit_time(ens, k)
        except InsufficientSample as exc:
            logger.info("Skipping edge %d in conditional means: %s", k, exc)
    worst = 0.0
    items = list(conditional.items()) + [(0, (mean, se))]
    for a in range(len(items)):
        for b in range(a + 1, len(items)):
            (_, (m1, s1)), (_, (m2, s2)) = items[a], items[b]
            pooled = math.hypot(s1, s2)
            if pooled > 0.0:
                worst = max(worst, abs(m1 - m2) / pooled)
    return TestReport(
        name="conditional_means",
        statistic=worst,
        threshold=CONDITIONAL_SE_BAND,
        passed=worst <= CONDITIONAL_SE_BAND,
        sample_size=len(ens.times()),
        censored=ens.censored,
        notes="edges " + ",".join(map(str, conditional)),
        extra={"conditional": conditional},
    )


def inner_section_ensemble(
    logs: Iterable[tuple[ExitRecord, Sequence]],
    epsilon: float,
    vertex: int,
    edges: Iterable[int],
    delta: float,
) -> ExitEnsemble:
    """
    First hit of the inner section C(delta) in each cycle log, as an ensemble.

    A trajectory that never reached C(delta) becomes a censored record; one
    that reached it but was censored later still contributes its first hit.
    """
    records = []
    for rec, events in logs:
        first = next((ev for ev in events if ev.kind == "tau"), None)
        if first is None:
            records.append(replace(rec, status=CENSORED, exit_edge=None, cycles=0))
        else:
            records.append(
                ExitRecord(EXITED, first.time, first.edge, vertex, None, 0, rec.steps, rec.trajectory)
            )
    return ExitEnsemble.from_records(records, epsilon, vertex, {k: delta for k in edges}, delta)


def inner_exit_report(
    ens: ExitEnsemble, target: Mapping[int, float], limit_mean: float
) -> TestReport:
    """Inner-section hit law against its Wilson intervals; the mean hit time rides along."""
    rep = place_report(ens, target)
    mean, se = mean_exit_time(ens)
    notes = f"mean {mean:.4g} +- {se:.2g}, limit {limit_mean:.4g}"
    if rep.notes:
        notes = f"{rep.notes}; {notes}"
    return replace(
        rep,
        name="inner_exit_place",
        notes=notes,
        extra={"mean": mean, "se": se, "limit_mean": limit_mean, "ratio": mean / limit_mean},
    )


# ---------------------------------------------------------------------------
# Trends across epsilon
# ---------------------------------------------------------------------------

def _by_epsilon(values: Mapping[float, float], what: str) -> list[tuple[float, float]]:
    pairs = sorted((float(e), float(v)) for e, v in values.items() if not math.isnan(v))
    if len(pairs) < 2:
        raise InsufficientSample(f"{what}: need values at 2 or more epsilons, got {len(pairs)}")
    return pairs


def exit_ratio_trend(ratios: Mapping[float, float]) -> TestReport:
    """
    Mean exit time over its limit scale, per epsilon.

    Passes when every ratio lies within EXIT_RATIO_BAND of 1 and the ratio at
    the smallest epsilon is strictly closer to 1 than at the largest.
    """
    pairs = _by_epsilon(ratios, "exit_ratio_trend")
    (eps_lo, r_lo), (eps_hi, r_hi) = pairs[0], pairs[-1]
    worst = max(abs(r - 1.0) for _, r in pairs)
    passed = worst <= EXIT_RATIO_BAND and abs(r_lo - 1.0) < abs(r_hi - 1.0)
    return TestReport(
        name="exit_ratio_trend",
        statistic=abs(r_lo - 1.0),
        threshold=abs(r_hi - 1.0),
        passed=bool(passed),
        sample_size=len(pairs),
        notes=f"ratio {r_hi:.4g} at eps={eps_hi:g}, {r_lo:.4g} at eps={eps_lo:g}",
        extra={"ratios": dict(pairs)},
    )


def shrinking_trend(name: str, values: Mapping[float, float]) -> TestReport:
    """Pass when the value at the smallest epsilon is below the value at the largest."""
    pairs = _by_epsilon(values, name)
    (eps_lo, v_lo), (eps_hi, v_hi) = pairs[0], pairs[-1]
    return TestReport(
        name=name,
        statistic=v_lo,
        threshold=v_hi,
        passed=bool(v_lo < v_hi),
        sample_size=len(pairs),
        notes=f"{v_hi:.4g} at eps={eps_hi:g}, {v_lo:.4g} at eps={eps_lo:g}",
        extra={"values": dict(pairs)},
    )


# ---------------------------------------------------------------------------
# Synthetic helpers
# ---------------------------------------------------------------------------

def rescale_edge_times(ens: ExitEnsemble, edge: int, factor: float) -> ExitEnsemble:
    """Copy of `ens` where exits through `edge` take `factor` times longer."""
    records = tuple(
        replace(r, exit_time=r.exit_time * factor) if r.exited and r.exit_edge == edge else r
        for r in ens.records
    )
    return replace(ens, records=records)


def synthetic_ensemble(
    times: Sequence[float],
    edges: Sequence[int],
    levels: Mapping[int, float],
    epsilon: float = 1.0,
    vertex: int = 1,
) -> ExitEnsemble:
    """Ensemble of exited records with the given times and edges."""
    records = [
        ExitRecord(EXITED, float(t), int(k), vertex, None, 0, 0, i)
        for i, (t, k) in enumerate(zip(times, edges))
    ]
    return ExitEnsemble.from_records(records, epsilon, vertex, levels)
