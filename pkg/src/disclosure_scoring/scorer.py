"""Rubric-guided scoring of company-year answer sets, and whole-history baselines."""

from __future__ import annotations

import csv
import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

from . import prompts
from .analytics import CorrelationMatrix, InsufficientOverlap, ScoreSeries, correlation_matrix
from .corpus import Corpus, DisclosureRecord, YearSlice, partition_by_year
from .gateway import CompletionRequest, Gateway, Schema, SchemaError, StructuredOutputError, structured
from .rubrics import Rubric, RubricSet, dumps_rubric, mask_years, validate_rubric

log = logging.getLogger(__name__)

DEFAULT_CHUNK_SIZE = 10


class ChunkFailure(RuntimeError):
    def __init__(self, year: int, company_id: str, cause: StructuredOutputError):
        super().__init__(f"year {year}, company {company_id}: {cause}")
        self.year = year
        self.company_id = company_id
        self.cause = cause


@dataclass(frozen=True)
class ScoreRecord:
    company_id: str
    year: int
    rubric_id: str
    item_scores: tuple[int, ...]
    prompt_hash: str = ""
    attempt: int = 1
    flagged: bool = False

    @property
    def total(self) -> int:
        return sum(self.item_scores)


@dataclass
class ScoreMatrix:
    rubric_id: str  # "master", or "yearly" for a matrix of per-year rubrics
    scores: dict[tuple[str, int], ScoreRecord] = field(default_factory=dict)

    def add(self, rec: ScoreRecord) -> None:
        family = "master" if rec.rubric_id == "master" else "yearly"
        if family != self.rubric_id:
            raise ValueError(f"record rubric {rec.rubric_id!r} does not belong to a {self.rubric_id!r} matrix")
        self.scores[(rec.company_id, rec.year)] = rec

    def totals(self) -> dict[tuple[str, int], int]:
        return {k: r.total for k, r in sorted(self.scores.items(), key=lambda kv: (kv[0][1], kv[0][0]))}

    def records(self) -> list[ScoreRecord]:
        return [self.scores[k] for k in sorted(self.scores, key=lambda k: (k[1], k[0]))]

    @property
    def years(self) -> list[int]:
        return sorted({y for _, y in self.scores})

    @property
    def flagged(self) -> int:
        return sum(r.flagged for r in self.scores.values())

    def __len__(self) -> int:
        return len(self.scores)


# -- structured contracts ----------------------------------------------------

def scores_schema(company_ids: Sequence[str], n_items: int) -> Schema:
    expected = set(company_ids)

    def parse(doc: Any) -> dict[str, list[int]]:
        if not isinstance(doc, dict) or not isinstance(doc.get("scores"), list):
            raise SchemaError("document must be an object with a 'scores' list")
        out: dict[str, list[int]] = {}
        for row in doc["scores"]:
            if not isinstance(row, dict):
                raise SchemaError("each 'scores' entry must be an object")
            cid = str(row.get("company_id", "")).strip()
            if cid not in expected:
                raise SchemaError(f"unexpected company_id {cid!r}")
            if cid in out:
                raise SchemaError(f"company_id {cid!r} appears twice")
            items = row.get("item_scores")
            if not isinstance(items, list) or len(items) != n_items:
                raise SchemaError(f"{cid}: 'item_scores' must list exactly {n_items} integers")
            vals = []
            for v in items:
                if isinstance(v, bool) or not isinstance(v, (int, float)) or float(v) != int(v):
                    raise SchemaError(f"{cid}: item score {v!r} is not an integer")
                vals.append(int(v))
            out[cid] = vals
        missing = expected - set(out)
        if missing:
            raise SchemaError("missing companies: " + ", ".join(sorted(missing)))
        return out

    return Schema("item_scores", prompts.SCORES_FORMAT, parse)


def clamp_scores(raw: Sequence[int], rubric: Rubric) -> tuple[tuple[int, ...], bool]:
    clamped = tuple(min(max(v, 0), it.max_points) for v, it in zip(raw, rubric.items))
    return clamped, clamped != tuple(raw)


# -- rubric scoring -----------------------------------------------------------

def _company_qa(recs: Iterable[DisclosureRecord], max_answer_chars: int | None) -> list[tuple[str, str, str]]:
    qa = []
    for r in recs:
        answer = r.answer_text if max_answer_chars is None else r.answer_text[:max_answer_chars]
        qa.append((r.question_id, r.question_text, answer))
    return qa


@dataclass(frozen=True)
class _Job:
    year: int
    rubric: Rubric
    rubric_json: str
    companies: tuple[tuple[str, tuple[DisclosureRecord, ...]], ...]


def _score_chunk(job: _Job, gateway: Gateway, model_id: str, max_answer_chars: int | None) -> list[ScoreRecord]:
    ids = [cid for cid, _ in job.companies]
    blocks = [prompts.company_block(cid, _company_qa(recs, max_answer_chars)) for cid, recs in job.companies]
    req = CompletionRequest(
        model_id=model_id,
        system_text=prompts.SYSTEM_SCORING,
        user_text=prompts.scoring_prompt(job.rubric.rubric_id, job.rubric_json, blocks),
        response_contract=structured("item_scores"),
    )
    try:
        res = gateway.complete_structured(req, scores_schema(ids, len(job.rubric.items)))
    except StructuredOutputError as exc:
        if len(job.companies) == 1:
            raise ChunkFailure(job.year, ids[0], exc) from exc
        half = len(job.companies) // 2
        log.warning("year %d: chunk of %d failed, splitting", job.year, len(job.companies))
        left = _Job(job.year, job.rubric, job.rubric_json, job.companies[:half])
        right = _Job(job.year, job.rubric, job.rubric_json, job.companies[half:])
        return _score_chunk(left, gateway, model_id, max_answer_chars) + _score_chunk(
            right, gateway, model_id, max_answer_chars
        )
    out = []
    for cid in ids:
        items, flagged = clamp_scores(res.document[cid], job.rubric)
        if flagged:
            log.warning("year %d, %s: out-of-range item scores %s clamped", job.year, cid, res.document[cid])
        out.append(ScoreRecord(cid, job.year, job.rubric.rubric_id, items, res.prompt_hash, res.attempt, flagged))
    return out


def _jobs(sl: YearSlice, rubric: Rubric, chunk_size: int) -> list[_Job]:
    if len(sl) == 0:
        raise ValueError(f"year slice {sl.year} is empty")
    report = validate_rubric(rubric)
    if not report.ok:
        raise ValueError(f"rubric {rubric.rubric_id} is invalid: {'; '.join(report.violations)}")
    if chunk_size < 1:
        raise ValueError("chunk_size must be >= 1")
    companies = tuple(sl.by_company.items())
    rj = dumps_rubric(rubric)
    return [
        _Job(sl.year, rubric, rj, companies[i:i + chunk_size]) for i in range(0, len(companies), chunk_size)
    ]


def _run_jobs(jobs: list[_Job], gateway: Gateway, model_id: str, max_answer_chars: int | None) -> list[ScoreRecord]:
    with ThreadPoolExecutor(max_workers=max(1, gateway.max_parallel)) as pool:
        futures = [pool.submit(_score_chunk, j, gateway, model_id, max_answer_chars) for j in jobs]
        results = [f.result() for f in futures]
    return sorted((r for rs in results for r in rs), key=lambda r: (r.year, r.company_id))


def score_slice(
    sl: YearSlice,
    rubric: Rubric,
    gateway: Gateway,
    model_id: str,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    max_answer_chars: int | None = None,
) -> list[ScoreRecord]:
    return _run_jobs(_jobs(sl, rubric, chunk_size), gateway, model_id, max_answer_chars)


def score_all_with_master(
    corpus: Corpus,
    master: Rubric,
    gateway: Gateway,
    model_id: str,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    max_answer_chars: int | None = None,
) -> ScoreMatrix:
    jobs = [j for sl in partition_by_year(corpus).values() for j in _jobs(sl, master, chunk_size)]
    matrix = ScoreMatrix("master")
    for rec in _run_jobs(jobs, gateway, model_id, max_answer_chars):
        matrix.add(rec)
    return matrix


def score_all_with_yearly(
    corpus: Corpus,
    rubric_set: RubricSet,
    gateway: Gateway,
    model_id: str,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    max_answer_chars: int | None = None,
) -> ScoreMatrix:
    slices = partition_by_year(corpus)
    missing = sorted(set(slices) - set(rubric_set.yearly))
    if missing:
        raise ValueError(f"no yearly rubric for year(s) {missing}")
    jobs = [j for y, sl in slices.items() for j in _jobs(sl, rubric_set.yearly[y], chunk_size)]
    matrix = ScoreMatrix("yearly")
    for rec in _run_jobs(jobs, gateway, model_id, max_answer_chars):
        matrix.add(rec)
    return matrix


# -- persistence ----------------------------------------------------------

def write_scores_csv(records: Sequence[ScoreRecord], path: str | Path) -> None:
    n_items = max((len(r.item_scores) for r in records), default=0)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["company_id", "year", *[f"item_{i}" for i in range(1, n_items + 1)], "total", "flagged"])
        for r in records:
            w.writerow([r.company_id, r.year, *r.item_scores, r.total, int(r.flagged)])
    with path.with_suffix(".provenance.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["company_id", "year", "rubric_id", "prompt_hash", "attempt"])
        for r in records:
            w.writerow([r.company_id, r.year, r.rubric_id, r.prompt_hash, r.attempt])


def read_scores_csv(path: str | Path, rubric_id: str) -> list[ScoreRecord]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        items = tuple(int(row[k]) for k in row if k.startswith("item_"))
        rec = ScoreRecord(row["company_id"], int(row["year"]), rubric_id, items, flagged=row["flagged"] == "1")
        if rec.total != int(row["total"]):
            raise ValueError(f"{path}: total mismatch for {rec.company_id} {rec.year}")
        out.append(rec)
    return out


def write_matrix(matrix: ScoreMatrix, scores_dir: str | Path) -> list[Path]:
    scores_dir = Path(scores_dir)
    if matrix.rubric_id == "master":
        p = scores_dir / "master.csv"
        write_scores_csv(matrix.records(), p)
        return [p]
    paths = []
    for y in matrix.years:
        p = scores_dir / f"yearly_{y}.csv"
        write_scores_csv([r for r in matrix.records() if r.year == y], p)
        paths.append(p)
    return paths


def read_matrix(scores_dir: str | Path, family: str) -> ScoreMatrix:
    scores_dir = Path(scores_dir)
    matrix = ScoreMatrix(family)
    if family == "master":
        paths = [scores_dir / "master.csv"]
    else:
        paths = sorted(scores_dir.glob("yearly_[0-9]*.csv"))
        paths = [p for p in paths if not p.name.endswith(".provenance.csv")]
    for p in paths:
        if not p.is_file():
            raise FileNotFoundError(p)
        rid = "master" if family == "master" else "yearly:" + p.stem.split("_", 1)[1]
        for rec in read_scores_csv(p, rid):
            matrix.add(rec)
    return matrix


# -- whole-history baselines ---------------------------------------------------

VARIANTS = ("plain", "year_hidden", "shuffled", "year_hidden+shuffled")


@dataclass(frozen=True)
class NaiveRun:
    method_id: str
    company_id: str
    variant: str
    series: dict[int, float]

    def as_series(self) -> ScoreSeries:
        return ScoreSeries(self.method_id, "score", self.series)


def period_scores_schema(labels: Sequence[str]) -> Schema:
    expected = set(labels)

    def parse(doc: Any) -> dict[str, float]:
        if not isinstance(doc, dict) or not isinstance(doc.get("scores"), list):
            raise SchemaError("document must be an object with a 'scores' list")
        out: dict[str, float] = {}
        for row in doc["scores"]:
            label = str(row.get("period", "")).strip() if isinstance(row, dict) else ""
            if label not in expected or label in out:
                raise SchemaError(f"unexpected or repeated period {label!r}")
            score = row.get("score")
            if isinstance(score, bool) or not isinstance(score, (int, float)):
                raise SchemaError(f"period {label}: score must be a number")
            out[label] = float(score)
        if set(out) != expected:
            raise SchemaError("missing periods: " + ", ".join(sorted(expected - set(out))))
        return out

    return Schema("period_scores", prompts.PERIOD_SCORES_FORMAT, parse)


def naive_request(
    company_id: str, corpus: Corpus, model_id: str, variant: str, seed: int = 0
) -> tuple[CompletionRequest, dict[str, int]]:
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    by_year: dict[int, list[DisclosureRecord]] = {}
    for r in corpus.records:
        if r.company_id == company_id:
            by_year.setdefault(r.year, []).append(r)
    if len(by_year) < 2:
        raise ValueError(f"company {company_id!r} is present in {len(by_year)} year(s); need at least 2")
    hide = "year_hidden" in variant
    years = sorted(by_year)
    if "shuffled" in variant:
        random.Random(f"{seed}:{company_id}").shuffle(years)
    labels = {y: (f"P{i:02d}" if hide else str(y)) for i, y in enumerate(years, 1)}
    blocks = []
    for y in years:
        qa = []
        for r in by_year[y]:
            q, a = r.question_text, r.answer_text
            if hide:
                q, a = mask_years(q), mask_years(a)
            qa.append((r.question_id, q, a))
        blocks.append(prompts.period_block(labels[y], qa))
    req = CompletionRequest(
        model_id=model_id,
        system_text=prompts.SYSTEM_SCORING,
        user_text=prompts.naive_prompt(blocks),
        response_contract=structured("period_scores"),
    )
    return req, {label: y for y, label in labels.items()}


def naive_longitudinal_score(
    company_id: str, corpus: Corpus, gateway: Gateway, model_id: str, variant: str = "plain", seed: int = 0
) -> NaiveRun:
    req, label_to_year = naive_request(company_id, corpus, model_id, variant, seed)
    res = gateway.complete_structured(req, period_scores_schema(list(label_to_year)))
    series = {label_to_year[lbl]: v for lbl, v in res.document.items()}
    return NaiveRun(f"{model_id}/{variant}", company_id, variant, dict(sorted(series.items())))


def method_correlation_matrix(runs: Sequence[NaiveRun]) -> CorrelationMatrix:
    if len(runs) < 2:
        raise ValueError("need at least 2 runs")
    common = sorted(set.intersection(*(set(r.series) for r in runs)))
    if len(common) < 3:
        raise InsufficientOverlap(f"runs share {len(common)} years, need 3")
    series = [ScoreSeries(r.method_id, "score", {y: r.series[y] for y in common}) for r in runs]
    return correlation_matrix(series)
