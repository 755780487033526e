"""Deterministic offline backend.

Replies are produced by reading the prompt the same way a model would: the
mock finds the rubric and company/period blocks via the markers in
:mod:`disclosure_scoring.prompts` and scores answers with a keyword count.
Scores depend only on one company's answers and the rubric, never on the
other companies in the prompt.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
import re
import threading
from importlib import resources
from typing import Any, Sequence

from .. import prompts
from ..corpus import tokenize
from .types import CompletionRequest

SATURATION = 4  # distinct keyword hits that earn an item's full marks

MOCK_STOPWORDS = frozenset(
    """mentions across related evidence explicitly overall references results clear
    lines links early stage qualitative partial others other based their which these
    those where being above about scale shapes robust examples comprehensive active
    planned adopted exec vague named defined""".split()
)

# Rubric-independent lexicon used by echo mode and the whole-history scorer.
LEXICON = frozenset(
    """climate strategy emissions targets governance board scenario carbon
    investors suppliers disclosure risk metrics reduction renewable energy
    oversight stakeholder integration transition pricing""".split()
)

_MASTER_ITEM5 = [
    {"points": 0, "description": "None"},
    {"points": 1, "description": "Boilerplate disclosure with major gaps"},
    {"points": 2, "description": "Specific disclosure of emissions or risks, some gaps"},
    {"points": 3, "description": "Detailed quantitative disclosure with verification"},
    {"points": 4, "description": "Comprehensive, verified and decision-useful public reporting"},
]


def _block_re(open_tpl: str, field: str, close: str) -> re.Pattern:
    head, tail = open_tpl.split("{" + field + "}")
    return re.compile(
        re.escape(head) + r"(.+?)" + re.escape(tail) + r"\n(.*?)\n" + re.escape(close), re.DOTALL
    )


_COMPANY_RE = _block_re(prompts.COMPANY_OPEN, "company_id", prompts.COMPANY_CLOSE)
_PERIOD_RE = _block_re(prompts.PERIOD_OPEN, "label", prompts.PERIOD_CLOSE)
_RUBRIC_RE = re.compile(r"=== RUBRIC .+? ===\n```json\n(.*?)\n```", re.DOTALL)
_ANSWER_RE = re.compile(r"\nA: (.*?)(?=\n\[[^\]\n]+\] Q: |\Z)", re.DOTALL)


def _template(name: str) -> dict[str, Any]:
    return json.loads(
        resources.files("disclosure_scoring.data").joinpath(f"{name}_rubric.json").read_text("utf-8")
    )


def answers_in(block_body: str) -> str:
    return "\n".join(_ANSWER_RE.findall("\n" + block_body))


def item_keywords(item: dict[str, Any]) -> frozenset[str]:
    text = " ".join(
        [item.get("item", ""), item.get("question", "")]
        + [g.get("description", "") for g in item.get("guidelines", [])]
    )
    return frozenset(
        t for t in tokenize(text) if len(t) >= 5 and t.isalpha() and t not in MOCK_STOPWORDS
    )


def keyword_item_scores(rubric_doc: dict[str, Any], answer_text: str) -> list[int]:
    """Per-item score: ``min(max, ceil(hits * max / SATURATION))``; monotone in hits."""
    tokens = set(tokenize(answer_text))
    scores = []
    for item in rubric_doc["items"]:
        hits = len(item_keywords(item) & tokens)
        mx = int(item["max_point"])
        scores.append(min(mx, math.ceil(hits * mx / SATURATION)))
    return scores


def echo_item_scores(n_items: int, answer_text: str) -> list[int]:
    """Rubric-independent scores: totals coincide for any two rubrics with ``n_items`` items."""
    level = min(n_items, len(LEXICON & set(tokenize(answer_text))) // 2)
    return [1 if i < level else 0 for i in range(n_items)]


def _fenced(doc: Any, lead: str) -> str:
    return f"{lead}\n```json\n{json.dumps(doc, ensure_ascii=False, indent=2)}\n```\n"


class MockBackend:
    name = "mock"

    def __init__(self, seed: int = 0, script: Sequence[str | Exception] | None = None, echo: bool = False):
        self.seed = seed
        self.echo = echo
        self._script = list(script or [])
        self._lock = threading.Lock()
        self.calls = 0

    def ensure_ready(self) -> None:
        return None

    def _rng(self, req: CompletionRequest) -> random.Random:
        h = hashlib.sha256(f"{self.seed}|{req.prompt_hash}".encode()).hexdigest()
        return random.Random(int(h[:16], 16))

    def send(self, req: CompletionRequest) -> str:
        with self._lock:
            self.calls += 1
            scripted = self._script.pop(0) if self._script else None
        if isinstance(scripted, Exception):
            raise scripted
        if scripted is not None:
            return scripted
        schema = req.schema_name
        if schema == "rubric":
            return self._rubric(req)
        if schema == "item_scores":
            return self._scores(req)
        if schema == "period_scores":
            return self._period_scores(req)
        return "Mock reply: " + hashlib.sha256(f"{self.seed}|{req.user_text}".encode()).hexdigest()[:16]

    def _rubric(self, req: CompletionRequest) -> str:
        is_master = "=== RUBRIC " in req.user_text
        doc = _template("table2" if is_master else "table1")
        if is_master:
            doc["items"][4]["guidelines"] = _MASTER_ITEM5
        items = doc["items"]
        self._rng(req).shuffle(items)
        for i, it in enumerate(items, 1):
            it["#"] = i
        doc.pop("rubric_id", None)
        return _fenced(doc, "Here is the rubric.")

    def _scores(self, req: CompletionRequest) -> str:
        m = _RUBRIC_RE.search(req.user_text)
        rubric_doc = json.loads(m.group(1)) if m else {"items": []}
        n_items = len(rubric_doc["items"])
        out = []
        for cid, body in _COMPANY_RE.findall(req.user_text):
            answers = answers_in(body)
            if self.echo:
                scores = echo_item_scores(n_items, answers)
            else:
                scores = keyword_item_scores(rubric_doc, answers)
            out.append({"company_id": cid, "item_scores": scores})
        return _fenced({"scores": out}, "Scores follow.")

    def _period_scores(self, req: CompletionRequest) -> str:
        out = []
        for label, body in _PERIOD_RE.findall(req.user_text):
            answers = answers_in(body)
            hits = len(LEXICON & set(tokenize(answers)))
            base = min(10.0, 20.0 * hits / len(LEXICON))
            h = hashlib.sha256(f"{self.seed}|{body}".encode()).hexdigest()
            jitter = int(h[:8], 16) / 16**8 * 0.5
            out.append({"period": label, "score": round(base + jitter, 2)})
        return _fenced({"scores": out}, "Period scores follow.")


def mock_backend(seed: int = 0, script: Sequence[str | Exception] | None = None, echo: bool = False) -> MockBackend:
    return MockBackend(seed=seed, script=script, echo=echo)
