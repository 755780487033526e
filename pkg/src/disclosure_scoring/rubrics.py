"""Rubric types, validation, serialization, and LLM-driven rubric induction."""

from __future__ import annotations

import hashlib
import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterable

from . import prompts
from .corpus import YearSlice
from .gateway import CompletionRequest, Gateway, Schema, SchemaError, structured


@dataclass(frozen=True)
class RubricItem:
    index: int
    name: str
    max_points: int
    guidelines: tuple[tuple[int, str], ...]
    question: str = ""


@dataclass(frozen=True)
class Rubric:
    rubric_id: str
    items: tuple[RubricItem, ...]
    source_prompt_hash: str = ""
    max_total: int = field(default=-1)

    def __post_init__(self) -> None:
        if self.max_total == -1:
            object.__setattr__(self, "max_total", sum(i.max_points for i in self.items))

    @property
    def is_master(self) -> bool:
        return self.rubric_id == "master"

    @property
    def file_stem(self) -> str:
        return self.rubric_id.replace(":", "_")


@dataclass
class RubricSet:
    yearly: dict[int, Rubric] = field(default_factory=dict)
    master: Rubric | None = None

    def __post_init__(self) -> None:
        if self.master is not None and not self.yearly:
            raise ValueError("a master rubric requires at least one yearly rubric")


@dataclass(frozen=True)
class ValidationReport:
    rubric_id: str
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_rubric(r: Rubric) -> ValidationReport:
    v: list[str] = []
    if not r.items:
        v.append("rubric has no items")
    expected = list(range(1, len(r.items) + 1))
    indices = [it.index for it in r.items]
    if sorted(indices) != expected:
        present = set(indices)
        for i in expected:
            if i not in present:
                v.append(f"index gap: item {i} missing")
        if len(present) != len(indices):
            v.append("duplicate item index")
        for i in sorted(present - set(expected)):
            v.append(f"index gap: item index {i} outside 1..{len(r.items)}")
    elif indices != expected:
        v.append("items not in index order")
    for it in r.items:
        tag = f"item {it.index}"
        if not it.name.strip():
            v.append(f"{tag}: empty name")
        if it.max_points < 1:
            v.append(f"{tag}: max_points must be positive")
        levels = [lvl for lvl, _ in it.guidelines]
        if len(set(levels)) != len(levels):
            v.append(f"{tag}: duplicate guideline level")
        for lvl in levels:
            if lvl < 0:
                v.append(f"{tag}: level {lvl} is negative")
            elif lvl > it.max_points:
                v.append(f"{tag}: level exceeds max ({lvl} > {it.max_points})")
        if it.max_points not in levels:
            v.append(f"{tag}: max_points {it.max_points} has no guideline level")
    total = sum(it.max_points for it in r.items)
    if r.max_total != total:
        v.append(f"max_total {r.max_total} != sum of item maxima {total}")
    return ValidationReport(r.rubric_id, tuple(v))


# -- serialization ---------------------------------------------------------

def rubric_to_doc(r: Rubric) -> dict[str, Any]:
    items = []
    for it in r.items:
        d: dict[str, Any] = {"#": it.index, "item": it.name}
        if it.question:
            d["question"] = it.question
        d["max_point"] = it.max_points
        d["guidelines"] = [{"points": p, "description": t} for p, t in it.guidelines]
        items.append(d)
    return {"rubric_id": r.rubric_id, "max_total": r.max_total, "items": items}


def dumps_rubric(r: Rubric) -> str:
    return json.dumps(rubric_to_doc(r), ensure_ascii=False, indent=2)


def _as_int(value: Any, what: str) -> int:
    if isinstance(value, bool):
        raise SchemaError(f"{what} must be an integer")
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, str) and re.fullmatch(r"\s*\d+\s*", value):
        return int(value)
    raise SchemaError(f"{what} must be an integer, got {value!r}")


def rubric_from_doc(doc: Any, rubric_id: str | None = None, source_prompt_hash: str = "") -> Rubric:
    """Build a :class:`Rubric` from its document form, raising ``SchemaError`` on type problems.

    Structural invariants are *not* checked here; see :func:`validate_rubric`.
    """
    if not isinstance(doc, dict) or not isinstance(doc.get("items"), list):
        raise SchemaError("document must be an object with an 'items' list")
    items = []
    for pos, raw in enumerate(doc["items"], 1):
        if not isinstance(raw, dict):
            raise SchemaError(f"items[{pos}] must be an object")
        name = raw.get("item")
        if not isinstance(name, str) or not name.strip():
            raise SchemaError(f"items[{pos}] needs a nonempty 'item' name")
        guides = raw.get("guidelines")
        if not isinstance(guides, list) or not guides:
            raise SchemaError(f"items[{pos}] needs a nonempty 'guidelines' list")
        levels = []
        for g in guides:
            if not isinstance(g, dict) or "points" not in g:
                raise SchemaError(f"items[{pos}] guideline entries need 'points' and 'description'")
            levels.append((_as_int(g["points"], f"items[{pos}] guideline points"), str(g.get("description", ""))))
        items.append(
            RubricItem(
                index=_as_int(raw.get("#", pos), f"items[{pos}] '#'"),
                name=name.strip(),
                max_points=_as_int(raw.get("max_point"), f"items[{pos}] 'max_point'"),
                guidelines=tuple(levels),
                question=str(raw.get("question", "")),
            )
        )
    rid = rubric_id or doc.get("rubric_id") or "unnamed"
    max_total = doc.get("max_total")
    max_total = -1 if max_total is None else _as_int(max_total, "max_total")
    return Rubric(rid, tuple(items), source_prompt_hash, max_total)


def load_rubric(path: str | Path) -> Rubric:
    path = Path(path)
    side = path.with_suffix(".provenance.json")
    prompt_hash = ""
    if side.is_file():
        prompt_hash = json.loads(side.read_text(encoding="utf-8")).get("source_prompt_hash", "")
    text = path.read_text(encoding="utf-8")
    return rubric_from_doc(json.loads(_strip_fence(text)), source_prompt_hash=prompt_hash)


def _strip_fence(text: str) -> str:
    m = re.search(r"```(?:json)?\s*\n(.*?)```", text, re.DOTALL)
    return m.group(1) if m else text


def reference_rubric(name: str) -> Rubric:
    """Load a bundled transcription: ``"table1"`` (2010 yearly) or ``"table2"`` (master)."""
    text = resources.files("disclosure_scoring.data").joinpath(f"{name}_rubric.json").read_text("utf-8")
    return rubric_from_doc(json.loads(text))


def rubric_schema(rubric_id: str) -> Schema:
    def parse(doc: Any) -> Rubric:
        r = rubric_from_doc(doc, rubric_id=rubric_id)
        report = validate_rubric(r)
        if not report.ok:
            raise SchemaError("; ".join(report.violations))
        return r

    return Schema(name="rubric", description=prompts.RUBRIC_FORMAT, parse=parse)


# -- persistence -----------------------------------------------------------

def save_rubric(r: Rubric, out_dir: str | Path, provenance: dict[str, Any] | None = None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{r.file_stem}.txt"
    path.write_text("```json\n" + dumps_rubric(r) + "\n```\n", encoding="utf-8")
    side = {"rubric_id": r.rubric_id, "source_prompt_hash": r.source_prompt_hash, **(provenance or {})}
    (out / f"{r.file_stem}.provenance.json").write_text(
        json.dumps(side, ensure_ascii=False, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return path


def load_rubric_set(rubric_dir: str | Path) -> RubricSet:
    rubric_dir = Path(rubric_dir)
    rs = RubricSet()
    for p in sorted(rubric_dir.glob("yearly_*.txt")):
        r = load_rubric(p)
        rs.yearly[int(r.rubric_id.split(":", 1)[1])] = r
    master = rubric_dir / "master.txt"
    if master.is_file():
        rs.master = load_rubric(master)
    return rs


# -- induction -------------------------------------------------------------

@dataclass(frozen=True)
class SamplingConfig:
    max_companies: int = 40
    max_answer_chars: int = 1200
    hide_years: bool = True
    seed: int = 0


_YEAR_RE = re.compile(r"\b(?:19|20)\d{2}\b")


def mask_years(text: str) -> str:
    return _YEAR_RE.sub("[YEAR]", text)


def _stable_key(seed: int, company_id: str) -> str:
    return hashlib.sha256(f"{seed}:{company_id}".encode()).hexdigest()


def stratified_sample(sl: YearSlice, max_companies: int, seed: int = 0) -> list[str]:
    """Pick up to ``max_companies`` company ids, round-robin across sectors.

    Order within a sector is a seeded hash order, so the sample is
    deterministic and stable under record reordering.
    """
    by_company = sl.by_company
    if len(by_company) <= max_companies:
        return list(by_company)
    strata: dict[str, list[str]] = {}
    for cid, recs in by_company.items():
        strata.setdefault(min(r.sector for r in recs), []).append(cid)
    queues = [sorted(ids, key=lambda c: _stable_key(seed, c)) for _, ids in sorted(strata.items())]
    picked: list[str] = []
    while len(picked) < max_companies:
        for q in queues:
            if q and len(picked) < max_companies:
                picked.append(q.pop(0))
    return sorted(picked)


def yearly_rubric_request(sl: YearSlice, model_id: str, sampling: SamplingConfig) -> tuple[CompletionRequest, dict]:
    if len(sl) == 0:
        raise ValueError(f"year slice {sl.year} is empty")
    chosen = stratified_sample(sl, sampling.max_companies, sampling.seed)
    by_company = sl.by_company
    blocks = []
    for cid in chosen:
        qa = []
        for r in by_company[cid]:
            answer = r.answer_text[: sampling.max_answer_chars]
            question = r.question_text
            if sampling.hide_years:
                answer, question = mask_years(answer), mask_years(question)
            qa.append((r.question_id, question, answer))
        blocks.append(prompts.company_block(cid, qa))
    user = prompts.yearly_rubric_prompt(blocks)
    req = CompletionRequest(
        model_id=model_id,
        system_text=prompts.SYSTEM_RUBRIC,
        user_text=user,
        response_contract=structured("rubric"),
    )
    info = {
        "year": sl.year,
        "companies_in_slice": len(by_company),
        "companies_in_prompt": len(chosen),
        "sampled": len(chosen) < len(by_company),
        "max_answer_chars": sampling.max_answer_chars,
        "years_masked": sampling.hide_years,
    }
    return req, info


def generate_yearly_rubric(
    sl: YearSlice,
    gateway: Gateway,
    model_id: str,
    sampling: SamplingConfig = SamplingConfig(),
    out_dir: str | Path | None = None,
) -> Rubric:
    req, info = yearly_rubric_request(sl, model_id, sampling)
    rubric_id = f"yearly:{sl.year}"
    res = gateway.complete_structured(req, rubric_schema(rubric_id))
    r: Rubric = res.document
    r = Rubric(rubric_id, r.items, res.prompt_hash, r.max_total)
    if out_dir is not None:
        save_rubric(r, out_dir, {**info, "model_id": model_id, "attempt": res.attempt})
    return r


def generate_yearly_rubrics(
    slices: Iterable[YearSlice],
    gateway: Gateway,
    model_id: str,
    sampling: SamplingConfig = SamplingConfig(),
    out_dir: str | Path | None = None,
) -> dict[int, Rubric]:
    slices = list(slices)
    with ThreadPoolExecutor(max_workers=max(1, gateway.max_parallel)) as pool:
        futures = {
            sl.year: pool.submit(generate_yearly_rubric, sl, gateway, model_id, sampling, out_dir)
            for sl in slices
        }
        return {year: futures[year].result() for year in sorted(futures)}


def master_rubric_request(rubric_set: RubricSet, model_id: str) -> CompletionRequest:
    if len(rubric_set.yearly) < 2:
        raise ValueError("master rubric needs yearly rubrics for at least 2 years")
    docs = [
        (rubric_set.yearly[y].rubric_id, dumps_rubric(rubric_set.yearly[y]))
        for y in sorted(rubric_set.yearly)
    ]
    return CompletionRequest(
        model_id=model_id,
        system_text=prompts.SYSTEM_RUBRIC,
        user_text=prompts.master_rubric_prompt(docs),
        response_contract=structured("rubric"),
    )


def aggregate_master_rubric(
    rubric_set: RubricSet,
    gateway: Gateway,
    model_id: str,
    out_dir: str | Path | None = None,
) -> Rubric:
    req = master_rubric_request(rubric_set, model_id)
    res = gateway.complete_structured(req, rubric_schema("master"))
    r: Rubric = res.document
    r = Rubric("master", r.items, res.prompt_hash, r.max_total)
    if out_dir is not None:
        save_rubric(
            r,
            out_dir,
            {"model_id": model_id, "attempt": res.attempt, "yearly_rubrics": sorted(rubric_set.yearly)},
        )
    rubric_set.master = r
    return r
