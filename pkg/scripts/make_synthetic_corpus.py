#!/usr/bin/env python3
"""Regenerate the bundled synthetic disclosure corpus and its manifest.

30 companies x 3 years (2010-2012) x 4 questions. Each company has a latent
disclosure quality that drifts upward over time; answer texts draw more
rubric vocabulary as quality rises. Includes Chinese and Japanese answers,
one company reported under two sectors, and one company with blank answers
in 2011.

    python scripts/make_synthetic_corpus.py
"""

from __future__ import annotations

import csv
import json
import random
from collections import defaultdict
from pathlib import Path

OUT_DIR = Path(__file__).resolve().parents[1] / "src" / "disclosure_scoring" / "data"
YEARS = (2010, 2011, 2012)
SEED = 20240611

QUESTIONS = [
    ("BS1", "Is climate change integrated into your business strategy? Describe how."),
    ("BS2", "Describe your emissions reduction targets and the metrics used to track progress."),
    ("BS3", "Have you used scenario analysis to assess climate-related risks and opportunities?"),
    ("BS4", "Describe board oversight of climate issues and your engagement with stakeholders."),
]

# vocabulary per question; overlaps the rubric language on purpose
VOCAB = {
    "BS1": "climate sustainability strategy planning integration functions competitive advantage "
           "mission enterprise financial transition renewable energy".split(),
    "BS2": "targets metrics quantified emissions progress reduction target science carbon pricing "
           "investment disclosure verification".split(),
    "BS3": "scenario analysis stress strategy financial planning pathway risk transition "
           "quantitative integrated physical".split(),
    "BS4": "governance oversight board senior management committees roles reporting review "
           "stakeholder engagement investors customers suppliers policymakers communication "
           "programs collaboration incentives".split(),
}

FILLER = {
    "en": ["our company", "this year", "we continue", "is important", "as part of our approach",
           "in line with expectations", "across the group", "where possible"],
    "pt": ["nossa empresa", "este ano", "continuamos", "e importante", "como parte da abordagem"],
    "fr": ["notre entreprise", "cette année", "nous poursuivons", "est essentiel", "dans le cadre"],
    "de": ["unser Unternehmen", "in diesem Jahr", "wir setzen fort", "ist wichtig", "im Rahmen"],
    "zh": ["我们公司重视气候变化", "碳排放管理是我们的重点", "本年度我们继续努力", "节能减排"],
    "ja": ["当社は気候変動への対応を重視しています", "温室効果ガス削減", "本年度の取り組み"],
}

COUNTRIES = [
    ("Germany", "de", 3),
    ("Japan", "ja", 4),
    ("United States", "en", 6),
    ("China", "zh", 4),
    ("Brazil", "pt", 4),
    ("France", "fr", 4),
    ("United Kingdom", "en", 5),
]

RAW_SECTORS = ["Industrials", "Chemicals", "Food & Beverage", "Software", "Logistics", "Utilities"]


def answer_text(rng: random.Random, qid: str, lang: str, quality: float, year: int) -> str:
    pool = VOCAB[qid]
    k = max(0, min(len(pool), round(quality * len(pool) * rng.uniform(0.7, 1.1))))
    words = rng.sample(pool, k)
    parts = []
    filler = FILLER[lang]
    for i in range(0, len(words), 2):
        chunk = " and ".join(words[i:i + 2])
        parts.append(f"{rng.choice(filler)} {chunk}.")
    if not parts:
        parts.append(f"{rng.choice(filler)}.")
    if rng.random() < 0.3:
        parts.append(f"Since {year - rng.randint(1, 5)} we report annually.")
    return " ".join(parts)


def build_rows() -> list[dict[str, str]]:
    rng = random.Random(SEED)
    rows = []
    cid = 0
    companies = []
    for country, lang, n in COUNTRIES:
        for _ in range(n):
            cid += 1
            companies.append((f"C{cid:03d}", country, lang))
    for i, (company_id, country, lang) in enumerate(companies):
        sector = RAW_SECTORS[i % len(RAW_SECTORS)]
        quality = rng.uniform(0.1, 0.8)
        name = f"Synthetic {country.split()[0]} Holdings {company_id}"
        for y_idx, year in enumerate(YEARS):
            q = min(1.0, quality + 0.08 * y_idx + rng.uniform(-0.05, 0.05))
            for q_idx, (qid, qtext) in enumerate(QUESTIONS):
                row_sector = sector
                if company_id == "C007" and q_idx >= 2:
                    row_sector = "Food & Beverage"
                text = answer_text(rng, qid, lang, q, year)
                if company_id == "C030" and year == 2011:
                    text = ""
                rows.append({
                    "company_id": company_id,
                    "company_name": name,
                    "country": country,
                    "sector": row_sector,
                    "year": str(year),
                    "question_id": qid,
                    "question_text": qtext,
                    "answer_text": text,
                })
    return rows


def manifest(rows: list[dict[str, str]]) -> dict:
    per_year = defaultdict(int)
    companies_year = defaultdict(set)
    country_year = defaultdict(set)
    for r in rows:
        per_year[r["year"]] += 1
        companies_year[r["year"]].add(r["company_id"])
        country_year[f'{r["country"]}|{r["year"]}'].add(r["company_id"])
    return {
        "records": len(rows),
        "companies": len({r["company_id"] for r in rows}),
        "years": sorted(int(y) for y in per_year),
        "records_per_year": {y: per_year[y] for y in sorted(per_year)},
        "companies_per_year": {y: len(companies_year[y]) for y in sorted(companies_year)},
        "companies_per_country_year": {k: len(v) for k, v in sorted(country_year.items())},
    }


def main() -> None:
    rows = build_rows()
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    with (OUT_DIR / "synthetic_corpus.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    (OUT_DIR / "synthetic_manifest.json").write_text(
        json.dumps(manifest(rows), indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    print(f"wrote {len(rows)} rows to {OUT_DIR / 'synthetic_corpus.csv'}")


if __name__ == "__main__":
    main()
