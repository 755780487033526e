"""Pipeline stages. Each stage reads its inputs from the output directory, writes its
outputs there, and records itself in ``manifest.json``."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from . import report
from .analytics import (
    correlation_matrix,
    group_mean_series,
    percentile_ranks,
    score_distribution,
    validate_rank_consistency,
    yoy_signed_pvalues,
)
from .config import PipelineConfig
from .corpus import (
    Corpus,
    load_corpus,
    partition_by_year,
    participation_counts,
    top_k_words,
    write_rejects,
)
from .gateway import CredentialMissing, Gateway, GatewayError
from .rubrics import RubricSet, aggregate_master_rubric, generate_yearly_rubric, load_rubric_set
from .scorer import (
    ChunkFailure,
    method_correlation_matrix,
    naive_longitudinal_score,
    read_matrix,
    score_all_with_master,
    score_all_with_yearly,
    write_matrix,
)

log = logging.getLogger(__name__)

EXIT_OK, EXIT_PARTIAL, EXIT_INPUT = 0, 1, 2
ANALYTICS_TABLES = (
    "percentiles", "tau_report", "corr_sector", "corr_country", "means", "yoy_pvalues", "distributions",
)


@dataclass
class StageResult:
    stage: str
    exit_code: int = EXIT_OK
    counts: dict[str, Any] = field(default_factory=dict)
    notices: list[str] = field(default_factory=list)
    seconds: float = 0.0

    def partial(self, msg: str) -> None:
        log.warning(msg)
        self.notices.append(msg)
        self.exit_code = max(self.exit_code, EXIT_PARTIAL)


def load(cfg: PipelineConfig) -> Corpus:
    corpus = load_corpus(cfg.corpus_path(), cfg.schema_config())
    if cfg.years is not None:
        lo, hi = cfg.years
        corpus = corpus.restrict_years(range(lo, hi + 1))
    return corpus


def _gateway_counts(gw: Gateway, before: dict[str, int] | None = None) -> dict[str, int]:
    """Calls made by this stage; a gateway shared across stages keeps running totals."""
    now = {"live_calls": gw.stats.live_calls, "cache_hits": gw.stats.cache_hits}
    if before:
        now = {k: v - before[k] for k, v in now.items()}
    return now


# -- stages -------------------------------------------------------------

def cmd_ingest(cfg: PipelineConfig) -> StageResult:
    res = StageResult("ingest")
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    corpus = load(cfg)
    write_rejects(corpus, out / "rejects.csv")
    slices = partition_by_year(corpus)
    report.write_rows(
        out / "corpus_summary.csv",
        ["year", "records", "companies", "countries", "sectors"],
        [[y, len(sl), len(sl.company_ids), len({r.country for r in sl.records}), len({r.sector for r in sl.records})]
         for y, sl in slices.items()],
    )
    for group_by in ("country", "sector"):
        stats = participation_counts(corpus, group_by)
        report.write_rows(out / f"participation_{group_by}.csv", [group_by, "year", "companies"],
                          [[g, y, n] for (g, y), n in stats.counts.items()])
    words = top_k_words(corpus, cfg.report.words_k, frozenset(w.lower() for w in cfg.corpus.stopwords))
    report.write_rows(
        out / "wordfreq.csv", ["country", "year", "rank", "token", "count"],
        [[c, y, i, tok, n] for (c, y), ranked in words.entries.items() for i, (tok, n) in enumerate(ranked, 1)],
    )
    res.counts = {
        "records": len(corpus),
        "rejects": len(corpus.rejects),
        "companies": len(corpus.companies()),
        "years": list(corpus.years),
    }
    return res


def cmd_rubrics(cfg: PipelineConfig, gateway: Gateway | None = None) -> StageResult:
    from concurrent.futures import ThreadPoolExecutor

    res = StageResult("rubrics")
    gw = gateway or cfg.make_gateway()
    before = _gateway_counts(gw)
    corpus = load(cfg)
    rubric_dir = cfg.output_dir / "rubrics"
    model = cfg.backend.model_id
    rs = RubricSet()
    slices = partition_by_year(corpus)
    with ThreadPoolExecutor(max_workers=max(1, gw.max_parallel)) as pool:
        futures = {y: pool.submit(generate_yearly_rubric, sl, gw, model, cfg.sampling, rubric_dir)
                   for y, sl in slices.items()}
        for y, fut in sorted(futures.items()):
            try:
                rs.yearly[y] = fut.result()
            except CredentialMissing:
                raise
            except GatewayError as exc:
                res.partial(f"yearly rubric {y} failed: {exc}")
    if len(rs.yearly) >= 2:
        try:
            aggregate_master_rubric(rs, gw, model, rubric_dir)
        except CredentialMissing:
            raise
        except GatewayError as exc:
            res.partial(f"master rubric failed: {exc}")
    else:
        res.partial(f"master rubric refused: only {len(rs.yearly)} yearly rubric(s) available, need 2")
    res.counts = {
        "yearly_rubrics": sorted(rs.yearly),
        "master": rs.master is not None,
        **_gateway_counts(gw, before),
    }
    return res


def cmd_score(cfg: PipelineConfig, rubric: str = "both", gateway: Gateway | None = None) -> StageResult:
    res = StageResult("score")
    gw = gateway or cfg.make_gateway()
    before = _gateway_counts(gw)
    corpus = load(cfg)
    rs = load_rubric_set(cfg.output_dir / "rubrics")
    scores_dir = cfg.output_dir / "scores"
    model, sc = cfg.backend.model_id, cfg.scoring
    families = ("yearly", "master") if rubric == "both" else (rubric,)
    for family in families:
        try:
            if family == "yearly":
                matrix = score_all_with_yearly(corpus, rs, gw, model, sc.chunk_size, sc.max_answer_chars)
            else:
                if rs.master is None:
                    raise ValueError("no master rubric found; run the 'rubrics' stage first")
                matrix = score_all_with_master(corpus, rs.master, gw, model, sc.chunk_size, sc.max_answer_chars)
        except ChunkFailure as exc:
            res.partial(f"{family} scoring incomplete, rerun to resume from cache: {exc}")
            continue
        write_matrix(matrix, scores_dir)
        res.counts[f"{family}_scores"] = len(matrix)
        res.counts[f"{family}_flagged"] = matrix.flagged
        if matrix.flagged:
            res.partial(f"{matrix.flagged} {family} score record(s) clamped to rubric bounds")
    res.counts.update(_gateway_counts(gw, before))
    return res


def cmd_naive(cfg: PipelineConfig, company_id: str, gateway: Gateway | None = None) -> StageResult:
    res = StageResult("naive")
    gw = gateway or cfg.make_gateway()
    before = _gateway_counts(gw)
    corpus = load(cfg)
    runs = [naive_longitudinal_score(company_id, corpus, gw, cfg.backend.model_id, v, cfg.naive.seed)
            for v in cfg.naive.variants]
    out = cfg.output_dir
    report.write_rows(out / "naive_runs.csv", ["method_id", "variant", "company_id", "year", "score"],
                      [[r.method_id, r.variant, r.company_id, y, s] for r in runs for y, s in r.series.items()])
    if len(runs) >= 2:
        m = method_correlation_matrix(runs)
        report.write_rows(out / "naive_correlation.csv", ["row", "col", "value"],
                          [row[1:] for row in report.corr_rows("score", m)])
    res.counts = {"runs": len(runs), **_gateway_counts(gw, before)}
    return res


def cmd_analyze(cfg: PipelineConfig, svg: bool | None = None) -> StageResult:
    res = StageResult("analyze")
    svg = cfg.report.svg if svg is None else svg
    corpus = load(cfg)
    scores_dir = cfg.output_dir / "scores"
    adir = cfg.output_dir / "analytics"
    master = read_matrix(scores_dir, "master")
    try:
        yearly = read_matrix(scores_dir, "yearly")
    except FileNotFoundError:
        yearly = None
    if yearly is None or not len(yearly):
        res.partial("no yearly scores; rank consistency not computed")

    master_totals = master.totals()
    master_pct = percentile_ranks(master).values
    rows = report.percentile_rows("master", master_totals, master_pct)
    if yearly is not None and len(yearly):
        rows += report.percentile_rows("yearly", yearly.totals(), percentile_ranks(yearly).values)
    report.write_rows(adir / "percentiles.csv", ["rubric", "company_id", "year", "total", "percentile"], rows)

    tau = validate_rank_consistency(yearly, master) if yearly is not None and len(yearly) else None
    report.write_rows(
        adir / "tau_report.csv",
        ["year", "n_companies", "n_pairs", "concordant", "discordant", "ties_yearly", "ties_master", "ties_both",
         "tau_b", "tau_a", "concordant_fraction"],
        report.tau_rows(tau) if tau else [],
    )
    if tau:
        for msg in tau.notices:
            res.partial(msg)

    metrics = {"score": master_totals, "percentile": master_pct}
    means_rows, yoy_rows, mean_series, pvalues = [], [], {}, {}
    for grouping in ("sector", "country"):
        groups = corpus.company_groups(grouping)
        counts: dict = {}
        for key in master_totals:
            for g in groups.get(key, {"Other"}):
                counts[(g, key[1])] = counts.get((g, key[1]), 0) + 1
        for metric, values in metrics.items():
            series = group_mean_series(values, groups, metric)
            mean_series[(grouping, metric)] = series
            means_rows += report.mean_rows(grouping, series, counts)
            pv, notices = yoy_signed_pvalues(values, groups, metric)
            yoy_rows += report.yoy_rows(grouping, pv)
            pvalues[(grouping, metric)] = pv
            for msg in notices:
                res.partial(f"{grouping} {msg}")
    report.write_rows(adir / "means.csv",
                      ["grouping", "group", "metric", "year", "mean", "n_companies", "weighting"], means_rows)
    report.write_rows(
        adir / "yoy_pvalues.csv",
        ["grouping", "group", "metric", "prev_year", "year", "n_prev", "n_curr", "mean_prev", "mean_curr",
         "t_stat", "df", "raw_p", "direction", "signed_display", "significant"],
        yoy_rows,
    )
    corr = {}
    for grouping in ("sector", "country"):
        rows = []
        for metric in metrics:
            series = mean_series[(grouping, metric)]
            if len(series) >= 2:
                corr[(grouping, metric)] = correlation_matrix(series)
                rows += report.corr_rows(metric, corr[(grouping, metric)])
        report.write_rows(adir / f"corr_{grouping}.csv", ["metric", "row", "col", "value"], rows)

    rs = load_rubric_set(cfg.output_dir / "rubrics")
    if rs.master is None:
        raise ValueError("no master rubric found; run the 'rubrics' stage first")
    dists = score_distribution(master, rs.master.max_total)
    drows = report.distribution_rows("master", dists)
    if yearly is not None and len(yearly) and rs.yearly:
        ymax = max(r.max_total for r in rs.yearly.values())
        drows += report.distribution_rows("yearly", score_distribution(yearly, ymax))
    report.write_rows(adir / "distributions.csv", ["rubric", "year", "total", "count", "density"], drows)

    if svg:
        _write_svgs(adir / "svg", master_pct, tau, mean_series, pvalues, corr, dists)
    res.counts = {"tables": len(ANALYTICS_TABLES), "svg": bool(svg), "master_scores": len(master)}
    return res


def _write_svgs(sdir: Path, master_pct, tau, mean_series, pvalues, corr, dists) -> None:
    from .analytics import ScoreSeries

    by_company: dict[str, dict[int, float]] = {}
    for (cid, year), v in master_pct.items():
        by_company.setdefault(cid, {})[year] = v
    sample = [ScoreSeries(c, "percentile", pts) for c, pts in sorted(by_company.items())[:7]]
    report.svg_lines(sdir / "percentiles.svg", [("master-rubric percentile, example companies", sample)], "percentile")
    years = sorted(tau.per_year) if tau else []
    report.svg_bars(sdir / "tau_report.svg",
                    [("Kendall tau-b, yearly vs master", years, [tau.per_year[y].tau for y in years] if tau else [])],
                    "tau")
    report.svg_lines(sdir / "means.svg", [(f"{g} mean {m}", mean_series[(g, m)])
                                          for g in ("sector", "country") for m in ("score", "percentile")])
    for g in ("sector", "country"):
        panels = [(f"{g} {m} correlation", corr[(g, m)]) for m in ("score", "percentile") if (g, m) in corr]
        if panels:
            report.svg_heatmaps(sdir / f"corr_{g}.svg", panels)
    report.svg_pvalues(sdir / "yoy_pvalues.svg", [(f"{g} {m}", pvalues[(g, m)])
                                                  for g in ("sector", "country") for m in ("score", "percentile")])
    report.svg_bars(sdir / "distributions.svg",
                    [(f"{y} density", list(range(len(d.counts))), list(d.density)) for y, d in sorted(dists.items())],
                    "density")


def cmd_run(cfg: PipelineConfig, gateway: Gateway | None = None, svg: bool | None = None) -> list[StageResult]:
    """All stages in order; stops after ``rubrics`` when no master rubric could be built."""
    gw = gateway or cfg.make_gateway()
    results = [timed(cmd_ingest, cfg), timed(cmd_rubrics, cfg, gw)]
    if results[-1].counts.get("master"):
        results.append(timed(cmd_score, cfg, "both", gw))
        if results[-1].exit_code == EXIT_OK or "master_scores" in results[-1].counts:
            results.append(timed(cmd_analyze, cfg, svg))
    return results


# -- manifest ----------------------------------------------------------

EXCLUDED_FROM_TREE = ("manifest.json", "cache", "audit")


def output_files(out: Path) -> list[Path]:
    files = []
    for p in sorted(out.rglob("*")):
        rel = p.relative_to(out)
        if p.is_file() and rel.parts[0] not in EXCLUDED_FROM_TREE:
            files.append(rel)
    return files


def _sha256(p: Path) -> str:
    return hashlib.sha256(p.read_bytes()).hexdigest()


def write_manifest(cfg: PipelineConfig, results: list[StageResult], corpus: Corpus | None = None) -> Path:
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    path = out / "manifest.json"
    manifest: dict[str, Any] = {}
    if path.is_file():
        try:
            manifest = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError:
            manifest = {}
    manifest["config_hash"] = cfg.config_hash()
    manifest["config"] = cfg.to_dict()
    if corpus is not None:
        manifest["corpus_provenance"] = asdict(corpus.provenance)
    rubric_dir = out / "rubrics"
    manifest["rubric_ids"] = sorted(p.stem.replace("_", ":", 1) if p.stem != "master" else "master"
                                    for p in rubric_dir.glob("*.txt")) if rubric_dir.is_dir() else []
    stages = manifest.setdefault("stages", {})
    for r in results:
        stages[r.stage] = {"exit_code": r.exit_code, "counts": r.counts, "notices": r.notices,
                           "seconds": round(r.seconds, 3)}
    manifest["totals"] = {
        "live_calls": sum(s["counts"].get("live_calls", 0) for s in stages.values()),
        "cache_hits": sum(s["counts"].get("cache_hits", 0) for s in stages.values()),
        "flagged": sum(v for s in stages.values() for k, v in s["counts"].items() if k.endswith("_flagged")),
    }
    manifest["cache_dir"] = str(cfg.cache_dir)
    manifest["files"] = {str(rel): _sha256(out / rel) for rel in output_files(out)}
    fd, tmp = tempfile.mkstemp(dir=out, prefix=".manifest.", suffix=".tmp")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    os.replace(tmp, path)
    return path


def timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    result = fn(*args, **kwargs)
    elapsed = time.perf_counter() - t0
    if isinstance(result, StageResult):
        result.seconds = elapsed
    return result
