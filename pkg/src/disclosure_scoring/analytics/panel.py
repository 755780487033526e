"""Panel-level analytics over (company, year) values: percentiles, rank consistency,
group means, correlation matrices, year-over-year tests, score distributions."""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from .stats import InsufficientOverlap, TauResult, kendall_tau, midrank_percentiles, time_correlation, welch_test

log = logging.getLogger(__name__)

Key = tuple[str, int]

P_FLOOR = 1e-3
SIGNIFICANCE = 0.05


def as_values(source: Any) -> dict[Key, float]:
    """Accept a ScoreMatrix-like object (``.totals()``) or a plain mapping."""
    if hasattr(source, "totals"):
        return dict(source.totals())
    if hasattr(source, "values") and isinstance(getattr(source, "values"), Mapping):
        return dict(source.values)
    return dict(source)


def _by_year(values: Mapping[Key, float]) -> dict[int, dict[str, float]]:
    out: dict[int, dict[str, float]] = defaultdict(dict)
    for (cid, year), v in values.items():
        out[year][cid] = v
    return {y: out[y] for y in sorted(out)}


# -- percentiles ---------------------------------------------------------

@dataclass(frozen=True)
class PercentileTable:
    values: dict[Key, float]


def percentile_ranks(matrix: Any) -> PercentileTable:
    totals = as_values(matrix)
    if not totals:
        raise ValueError("score matrix is empty")
    out: dict[Key, float] = {}
    for year, companies in _by_year(totals).items():
        ids = sorted(companies)
        for cid, pct in zip(ids, midrank_percentiles([companies[c] for c in ids])):
            out[(cid, year)] = pct
    return PercentileTable(dict(sorted(out.items(), key=lambda kv: (kv[0][1], kv[0][0]))))


# -- rank consistency ------------------------------------------------------

@dataclass(frozen=True)
class YearTau:
    year: int
    result: TauResult

    @property
    def tau(self) -> float | None:
        return self.result.tau_b


@dataclass
class TauReport:
    per_year: dict[int, YearTau] = field(default_factory=dict)
    notices: list[str] = field(default_factory=list)


def validate_rank_consistency(yearly: Any, master: Any) -> TauReport:
    """Per-year Kendall tau between yearly-rubric and master-rubric totals."""
    ya, ma = _by_year(as_values(yearly)), _by_year(as_values(master))
    report = TauReport()
    for year in sorted(set(ya) | set(ma)):
        common = sorted(set(ya.get(year, {})) & set(ma.get(year, {})))
        if len(common) < 2:
            msg = f"year {year}: {len(common)} common companies, skipped"
            log.info(msg)
            report.notices.append(msg)
            continue
        res = kendall_tau([ya[year][c] for c in common], [ma[year][c] for c in common])
        report.per_year[year] = YearTau(year, res)
    return report


# -- series & correlation -----------------------------------------------------

@dataclass(frozen=True)
class ScoreSeries:
    entity: str
    metric: str
    points: dict[int, float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", dict(sorted(self.points.items())))

    def __neg__(self) -> "ScoreSeries":
        return ScoreSeries(self.entity, self.metric, {t: -v for t, v in self.points.items()})


def series_correlation(x: ScoreSeries, y: ScoreSeries) -> float | None:
    return time_correlation(x.points, y.points)


@dataclass(frozen=True)
class CorrelationMatrix:
    labels: tuple[str, ...]
    values: tuple[tuple[float | None, ...], ...]

    def cell(self, i: str, j: str) -> float | None:
        return self.values[self.labels.index(i)][self.labels.index(j)]


def correlation_matrix(series: Sequence[ScoreSeries]) -> CorrelationMatrix:
    """Pairwise correlations. Undefined cells (constant series, too few common years) are ``None``."""
    if len(series) < 2:
        raise ValueError("need at least 2 series")
    n = len(series)
    grid: list[list[float | None]] = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            try:
                c = series_correlation(series[i], series[j])
            except InsufficientOverlap:
                c = None
            if i == j and c is not None:
                c = 1.0
            grid[i][j] = grid[j][i] = c
    return CorrelationMatrix(tuple(s.entity for s in series), tuple(tuple(r) for r in grid))


# -- group aggregation --------------------------------------------------------

def _members(
    values: Mapping[Key, float], groups: Mapping[Key, Iterable[str]]
) -> dict[str, dict[int, list[float]]]:
    out: dict[str, dict[int, list[float]]] = defaultdict(lambda: defaultdict(list))
    for (cid, year), v in sorted(values.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        for g in sorted(set(groups.get((cid, year), ())) or {"Other"}):
            out[g][year].append(v)
    return out


def group_mean_series(source: Any, groups: Mapping[Key, Iterable[str]], metric: str = "score") -> list[ScoreSeries]:
    """Unweighted per-group, per-year means. A company in several groups counts in each."""
    values = as_values(source)
    out = []
    for g, per_year in sorted(_members(values, groups).items()):
        out.append(ScoreSeries(g, metric, {y: math.fsum(vs) / len(vs) for y, vs in per_year.items()}))
    return out


@dataclass(frozen=True)
class SignedPValue:
    year: int
    prev_year: int
    n_prev: int
    n_curr: int
    mean_prev: float
    mean_curr: float
    t_stat: float
    df: float
    raw_p: float
    direction: int

    @property
    def signed_display(self) -> float:
        if self.direction == 0:
            return 0.0
        return self.direction * max(self.raw_p, P_FLOOR)

    @property
    def significant(self) -> bool:
        return self.raw_p <= SIGNIFICANCE


@dataclass(frozen=True)
class SignedPValueSeries:
    entity: str
    metric: str
    points: dict[int, SignedPValue]


def signed_pvalue(prev: Sequence[float], curr: Sequence[float], year: int = 0, prev_year: int = 0) -> SignedPValue:
    w = welch_test(prev, curr)
    return SignedPValue(year, prev_year, len(prev), len(curr), w.mean_a, w.mean_b, w.t_stat, w.df, w.p_value, w.direction)


def yoy_signed_pvalues(
    source: Any, groups: Mapping[Key, Iterable[str]], metric: str = "score"
) -> tuple[list[SignedPValueSeries], list[str]]:
    """Welch tests between each year and the previous year, per group."""
    values = as_values(source)
    years = sorted({y for _, y in values})
    notices: list[str] = []
    out = []
    for g, per_year in sorted(_members(values, groups).items()):
        points = {}
        for prev, curr in zip(years, years[1:]):
            a, b = per_year.get(prev, []), per_year.get(curr, [])
            if len(a) < 2 or len(b) < 2:
                notices.append(f"{metric} {g} {prev}->{curr}: n={len(a)}/{len(b)}, skipped")
                continue
            points[curr] = signed_pvalue(a, b, curr, prev)
        out.append(SignedPValueSeries(g, metric, points))
    return out, notices


# -- distributions -----------------------------------------------------------

@dataclass(frozen=True)
class Distribution:
    year: int
    counts: tuple[int, ...]  # index = integer total

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def density(self) -> tuple[float, ...]:
        return tuple(c / self.n for c in self.counts)  # unit-width bins


def score_distribution(source: Any, max_total: int) -> dict[int, Distribution]:
    out = {}
    for year, companies in _by_year(as_values(source)).items():
        counts = [0] * (max_total + 1)
        for v in companies.values():
            iv = int(v)
            if iv != v or not 0 <= iv <= max_total:
                raise ValueError(f"total {v} is not an integer in [0, {max_total}]")
            counts[iv] += 1
        out[year] = Distribution(year, tuple(counts))
    return out
