"""Plot-ready CSV tables and optional static SVG charts.

Column orders (all files under ``analytics/``):

- percentiles.csv: rubric, company_id, year, total, percentile
- tau_report.csv: year, n_companies, n_pairs, concordant, discordant, ties_yearly,
  ties_master, ties_both, tau_b, tau_a, concordant_fraction
- means.csv: grouping, group, metric, year, mean, n_companies, weighting
- corr_sector.csv / corr_country.csv: metric, row, col, value
- yoy_pvalues.csv: grouping, group, metric, prev_year, year, n_prev, n_curr, mean_prev,
  mean_curr, t_stat, df, raw_p, direction, signed_display, significant
- distributions.csv: rubric, year, total, count, density

Undefined statistics are written as ``undefined``.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Sequence

from .analytics import (
    P_FLOOR,
    SIGNIFICANCE,
    CorrelationMatrix,
    Distribution,
    ScoreSeries,
    SignedPValueSeries,
    TauReport,
)

UNDEFINED = "undefined"


def fmt(x: float | int | None) -> str:
    if x is None:
        return UNDEFINED
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    if math.isnan(x):
        return UNDEFINED
    return repr(round(float(x), 12))


def write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return path


def percentile_rows(family: str, totals: dict, percentiles: dict) -> list[list]:
    return [[family, cid, year, totals[(cid, year)], percentiles[(cid, year)]]
            for (cid, year) in sorted(percentiles, key=lambda k: (k[1], k[0]))]


def tau_rows(report: TauReport) -> list[list]:
    rows = []
    for year, yt in sorted(report.per_year.items()):
        r = yt.result
        cf = r.concordant_fraction
        rows.append([year, r.n, r.n_pairs, r.concordant, r.discordant, r.ties_a, r.ties_b, r.ties_both,
                     r.tau_b, r.tau_a, None if cf is None else float(cf)])
    return rows


def mean_rows(grouping: str, series: Sequence[ScoreSeries], counts: dict) -> list[list]:
    return [[grouping, s.entity, s.metric, y, v, counts.get((s.entity, y), 0), "equal"]
            for s in series for y, v in s.points.items()]


def corr_rows(metric: str, m: CorrelationMatrix) -> list[list]:
    return [[metric, a, b, m.values[i][j]] for i, a in enumerate(m.labels) for j, b in enumerate(m.labels)]


def yoy_rows(grouping: str, series: Sequence[SignedPValueSeries]) -> list[list]:
    rows = []
    for s in series:
        for year, p in s.points.items():
            rows.append([grouping, s.entity, s.metric, p.prev_year, year, p.n_prev, p.n_curr, p.mean_prev,
                         p.mean_curr, p.t_stat, p.df, p.raw_p, p.direction, p.signed_display, p.significant])
    return rows


def distribution_rows(family: str, dists: dict[int, Distribution]) -> list[list]:
    return [[family, year, total, c, d.density[total]]
            for year, d in sorted(dists.items()) for total, c in enumerate(d.counts)]


# -- SVG -----------------------------------------------------------------

def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "disclosure-scoring"
    plt.rcParams["svg.fonttype"] = "none"
    return plt


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None}, bbox_inches="tight")
    _pyplot().close(fig)
    return path


def svg_lines(path: Path, panels: Sequence[tuple[str, Sequence[ScoreSeries]]], ylabel: str = "") -> Path:
    plt = _pyplot()
    fig, axes = plt.subplots(1, len(panels), figsize=(5 * len(panels), 3.5), squeeze=False)
    for ax, (title, series) in zip(axes[0], panels):
        for s in series:
            ax.plot(list(s.points), list(s.points.values()), marker="o", label=s.entity)
        ax.set_title(title, fontsize=9)
        ax.set_xlabel("year")
        ax.set_ylabel(ylabel)
        if series:
            ax.legend(fontsize=6)
    return _save(fig, path)


def svg_heatmaps(path: Path, panels: Sequence[tuple[str, CorrelationMatrix]]) -> Path:
    plt = _pyplot()
    fig, axes = plt.subplots(1, len(panels), figsize=(5 * len(panels), 4.5), squeeze=False)
    for ax, (title, m) in zip(axes[0], panels):
        grid = [[math.nan if v is None else v for v in row] for row in m.values]
        ax.imshow(grid, vmin=-1, vmax=1, cmap="RdBu_r")
        ax.set_xticks(range(len(m.labels)), m.labels, rotation=90, fontsize=6)
        ax.set_yticks(range(len(m.labels)), m.labels, fontsize=6)
        for i, row in enumerate(m.values):
            for j, v in enumerate(row):
                ax.text(j, i, "n/a" if v is None else f"{v:.2f}", ha="center", va="center", fontsize=5)
        ax.set_title(title, fontsize=9)
    return _save(fig, path)


def svg_pvalues(path: Path, panels: Sequence[tuple[str, Sequence[SignedPValueSeries]]]) -> Path:
    """Signed, floor-cropped p-values on a symmetric log axis; grey band marks p > 0.05."""
    plt = _pyplot()
    fig, axes = plt.subplots(1, len(panels), figsize=(5 * len(panels), 3.5), squeeze=False)
    for ax, (title, series) in zip(axes[0], panels):
        ax.axhspan(SIGNIFICANCE, 1.0, color="0.85")
        ax.axhspan(-1.0, -SIGNIFICANCE, color="0.85")
        for s in series:
            if s.points:
                ax.plot(list(s.points), [p.signed_display for p in s.points.values()], marker="o", label=s.entity)
        ax.set_yscale("symlog", linthresh=P_FLOOR)
        ax.set_ylim(-1.05, 1.05)
        ax.set_title(title, fontsize=9)
        ax.set_xlabel("year")
        ax.set_ylabel("signed p-value")
        ax.legend(fontsize=6)
    return _save(fig, path)


def svg_bars(path: Path, panels: Sequence[tuple[str, Sequence, Sequence]], ylabel: str = "") -> Path:
    plt = _pyplot()
    fig, axes = plt.subplots(1, len(panels), figsize=(4 * len(panels), 3.2), squeeze=False)
    for ax, (title, xs, ys) in zip(axes[0], panels):
        ax.bar([str(x) for x in xs], [0 if y is None else y for y in ys])
        ax.set_title(title, fontsize=9)
        ax.set_ylabel(ylabel)
    return _save(fig, path)
