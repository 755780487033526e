"""Disclosure corpus loading, partitioning and descriptive statistics."""

from __future__ import annotations

import csv
import json
import re
import unicodedata
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping

CANONICAL_SECTORS = (
    "Manufacturing & Heavy Industry",
    "Chemicals, Pharmaceuticals & Materials",
    "Food, Agriculture & Consumer Goods",
    "Technology, Media & Communications",
    "Transportation & Logistics",
    "Other",
)

REQUIRED_COLUMNS = (
    "company_id",
    "company_name",
    "country",
    "sector",
    "year",
    "question_id",
    "question_text",
    "answer_text",
)

DEFAULT_YEAR_WINDOW = (2010, 2020)


class CorpusError(Exception):
    """Raised when a corpus file cannot be loaded at all."""


@dataclass(frozen=True)
class DisclosureRecord:
    company_id: str
    company_name: str
    country: str
    sector: str
    year: int
    question_id: str
    question_text: str
    answer_text: str

    @property
    def key(self) -> tuple[str, int, str]:
        return (self.company_id, self.year, self.question_id)


@dataclass(frozen=True)
class Reject:
    row_number: int
    reason: str


@dataclass(frozen=True)
class Provenance:
    source: str
    loaded_at: str
    rows_read: int
    rows_accepted: int
    rows_rejected: int
    rows_filtered: int = 0


@dataclass(frozen=True)
class Corpus:
    records: tuple[DisclosureRecord, ...]
    provenance: Provenance
    rejects: tuple[Reject, ...] = ()
    years: tuple[int, ...] = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "years", tuple(sorted({r.year for r in self.records})))

    def __len__(self) -> int:
        return len(self.records)

    def companies(self) -> set[str]:
        return {r.company_id for r in self.records}

    def company_groups(self, group_by: str) -> dict[tuple[str, int], set[str]]:
        """Map (company_id, year) to the set of country or sector labels it carries."""
        attr = _group_attr(group_by)
        out: dict[tuple[str, int], set[str]] = defaultdict(set)
        for r in self.records:
            out[(r.company_id, r.year)].add(getattr(r, attr))
        return dict(out)

    def restrict_years(self, years: Iterable[int]) -> "Corpus":
        keep = set(years)
        records = tuple(r for r in self.records if r.year in keep)
        return Corpus(records=records, provenance=self.provenance, rejects=self.rejects)

    def dumps(self) -> str:
        """Serialize records and row counts. The load timestamp is excluded."""
        prov = asdict(self.provenance)
        prov.pop("loaded_at")
        payload = {
            "provenance": prov,
            "years": list(self.years),
            "records": [asdict(r) for r in self.records],
        }
        return json.dumps(payload, ensure_ascii=False, sort_keys=True)


@dataclass(frozen=True)
class YearSlice:
    year: int
    records: tuple[DisclosureRecord, ...]

    @property
    def by_company(self) -> dict[str, tuple[DisclosureRecord, ...]]:
        groups: dict[str, list[DisclosureRecord]] = defaultdict(list)
        for r in self.records:
            groups[r.company_id].append(r)
        return {cid: tuple(rs) for cid, rs in sorted(groups.items())}

    @property
    def company_ids(self) -> list[str]:
        return sorted({r.company_id for r in self.records})

    def __len__(self) -> int:
        return len(self.records)


@dataclass
class SchemaConfig:
    """Maps canonical field names to CSV header names, plus load-time options."""

    columns: dict[str, str] = field(default_factory=dict)
    year_window: tuple[int, int] = DEFAULT_YEAR_WINDOW
    sector_map: dict[str, str] = field(default_factory=dict)
    country_aliases: dict[str, str] = field(default_factory=dict)
    question_allowlist: dict[int, set[str]] | None = None

    def column(self, name: str) -> str:
        return self.columns.get(name, name)


def read_sector_map(path: str | Path) -> dict[str, str]:
    """Parse lines of ``raw label -> canonical sector`` (``→`` also accepted)."""
    mapping: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = re.split(r"\s*(?:->|→)\s*", line, maxsplit=1)
        if len(parts) != 2:
            raise CorpusError(f"{path}:{lineno}: expected 'raw -> canonical'")
        raw, canonical = parts
        if canonical not in CANONICAL_SECTORS:
            raise CorpusError(f"{path}:{lineno}: unknown canonical sector {canonical!r}")
        mapping[_norm_label(raw)] = canonical
    return mapping


def _norm_label(s: str) -> str:
    return " ".join(unicodedata.normalize("NFKC", s).split()).casefold()


def canonical_sector(raw: str, sector_map: Mapping[str, str]) -> str:
    raw = " ".join(raw.split())
    if raw in CANONICAL_SECTORS:
        return raw
    return sector_map.get(_norm_label(raw), "Other")


def canonical_country(raw: str, aliases: Mapping[str, str]) -> str:
    name = " ".join(unicodedata.normalize("NFKC", raw).split())
    folded = {k.casefold(): v for k, v in aliases.items()}
    return folded.get(name.casefold(), name)


def load_corpus(path: str | Path, schema_config: SchemaConfig | None = None) -> Corpus:
    cfg = schema_config or SchemaConfig()
    path = Path(path)
    if not path.is_file():
        raise CorpusError(f"corpus file not found: {path}")

    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if cfg.column(c) not in header]
        if missing:
            raise CorpusError(
                "missing required column(s): " + ", ".join(cfg.column(c) for c in missing)
            )
        rows = list(reader)

    lo, hi = cfg.year_window
    records: list[DisclosureRecord] = []
    rejects: list[Reject] = []
    seen: set[tuple[str, int, str]] = set()
    filtered = 0
    # header is row 1
    for row_number, row in enumerate(rows, start=2):
        get = lambda name: (row.get(cfg.column(name)) or "")  # noqa: E731
        company_id = get("company_id").strip()
        if not company_id:
            rejects.append(Reject(row_number, "missing company_id"))
            continue
        try:
            year = int(get("year").strip())
        except ValueError:
            rejects.append(Reject(row_number, "year not an integer"))
            continue
        if not lo <= year <= hi:
            rejects.append(Reject(row_number, "year out of window"))
            continue
        question_id = get("question_id").strip()
        if not question_id:
            rejects.append(Reject(row_number, "missing question_id"))
            continue
        if cfg.question_allowlist is not None:
            allowed = cfg.question_allowlist.get(year)
            if allowed is not None and question_id not in allowed:
                filtered += 1
                continue
        rec = DisclosureRecord(
            company_id=company_id,
            company_name=get("company_name").strip(),
            country=canonical_country(get("country"), cfg.country_aliases),
            sector=canonical_sector(get("sector"), cfg.sector_map),
            year=year,
            question_id=question_id,
            question_text=get("question_text").strip(),
            answer_text=get("answer_text"),
        )
        if rec.key in seen:
            rejects.append(Reject(row_number, "duplicate (company_id, year, question_id)"))
            continue
        seen.add(rec.key)
        records.append(rec)

    if not records:
        raise CorpusError(f"zero valid rows in {path}")

    prov = Provenance(
        source=str(path),
        loaded_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        rows_read=len(rows),
        rows_accepted=len(records),
        rows_rejected=len(rejects),
        rows_filtered=filtered,
    )
    return Corpus(records=tuple(records), provenance=prov, rejects=tuple(rejects))


def write_rejects(corpus: Corpus, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row_number", "reason"])
        for rej in corpus.rejects:
            w.writerow([rej.row_number, rej.reason])


def partition_by_year(corpus: Corpus) -> dict[int, YearSlice]:
    buckets: dict[int, list[DisclosureRecord]] = defaultdict(list)
    for r in corpus.records:
        buckets[r.year].append(r)
    return {y: YearSlice(y, tuple(buckets[y])) for y in sorted(buckets)}


def consistent_participants(corpus: Corpus) -> set[str]:
    """Companies with at least one record in every year of the corpus."""
    per_year = [set(s.company_ids) for s in partition_by_year(corpus).values()]
    if not per_year:
        return set()
    return set.intersection(*per_year)


def _group_attr(group_by: str) -> str:
    if group_by not in ("country", "sector"):
        raise ValueError(f"group_by must be 'country' or 'sector', got {group_by!r}")
    return group_by


@dataclass(frozen=True)
class ParticipationStats:
    group_by: str
    counts: dict[tuple[str, int], int]


def participation_counts(corpus: Corpus, group_by: str) -> ParticipationStats:
    attr = _group_attr(group_by)
    members: dict[tuple[str, int], set[str]] = defaultdict(set)
    for r in corpus.records:
        members[(getattr(r, attr), r.year)].add(r.company_id)
    counts = {k: len(v) for k, v in sorted(members.items())}
    return ParticipationStats(group_by=group_by, counts=counts)


# CJK Unified Ideographs, Extension A, Compatibility Ideographs, Extensions B-F.
_CJK = (
    "\u3400-\u4dbf\u4e00-\u9fff\uf900-\ufaff"
    "\U00020000-\U0002a6df\U0002a700-\U0002ebef"
)
_TOKEN_RE = re.compile(rf"[{_CJK}]|(?:(?![{_CJK}])[^\W_])+")


def tokenize(text: str, stopwords: frozenset[str] | set[str] = frozenset()) -> list[str]:
    """Lowercased word tokens; each CJK ideograph is its own token."""
    tokens = _TOKEN_RE.findall(text.lower())
    if stopwords:
        tokens = [t for t in tokens if t not in stopwords]
    return tokens


@dataclass(frozen=True)
class WordFrequencyTable:
    k: int
    entries: dict[tuple[str, int], list[tuple[str, int]]]


def top_k_words(
    corpus: Corpus, k: int, stopwords: frozenset[str] | set[str] = frozenset()
) -> WordFrequencyTable:
    if k < 1:
        raise ValueError("k must be >= 1")
    counters: dict[tuple[str, int], Counter] = defaultdict(Counter)
    for r in corpus.records:
        counters[(r.country, r.year)].update(tokenize(r.answer_text, stopwords))
    entries = {}
    for key in sorted(counters):
        ranked = sorted(counters[key].items(), key=lambda kv: (-kv[1], kv[0]))
        entries[key] = ranked[:k]
    return WordFrequencyTable(k=k, entries=entries)
