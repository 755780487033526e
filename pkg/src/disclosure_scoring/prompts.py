"""Prompt templates and the block markers that delimit corpus content inside prompts.

The mock backend parses prompts through the same markers, so changing a
marker here changes both sides consistently.
"""

from __future__ import annotations

SYSTEM_RUBRIC = (
    "You are an expert analyst of corporate climate disclosures. You design "
    "transparent scoring rubrics and apply them consistently."
)
SYSTEM_SCORING = (
    "You are an expert analyst of corporate climate disclosures. You grade "
    "questionnaire answers strictly against the rubric you are given."
)

YEARLY_INSTRUCTION = (
    "First, generate a rubric to evaluate climate responses. Then, based on the "
    "rubric to evaluate the answers and output a csv for the companies."
)
YEARLY_SCOPE_NOTE = (
    "For this step return only the rubric. Company scores are requested separately."
)
MASTER_INSTRUCTION = (
    "Based on the {n} rubrics generated, generate one comprehensive but concise "
    "rubric that works for all rubrics across these years:"
)
SCORING_INSTRUCTION = (
    "Based on the rubric, evaluate the answers of each company below and output "
    "the scores for each company. Give every rubric item an integer score between "
    "0 and that item's max point."
)
NAIVE_INSTRUCTION = (
    "The following are one company's answers to a climate disclosure questionnaire "
    "over several reporting periods. Evaluate the climate strategy disclosed in each "
    "period and give each period a score between 0 and 10."
)

COMPANY_OPEN = "=== COMPANY {company_id} ==="
COMPANY_CLOSE = "=== END COMPANY ==="
PERIOD_OPEN = "=== PERIOD {label} ==="
PERIOD_CLOSE = "=== END PERIOD ==="
RUBRIC_OPEN = "=== RUBRIC {rubric_id} ==="
RUBRIC_CLOSE = "=== END RUBRIC ==="

RUBRIC_FORMAT = """{
  "items": [
    {"#": 1, "item": "<short item name>", "max_point": <positive integer>,
     "guidelines": [{"points": <integer level 0..max_point>, "description": "<what earns it>"}, ...]},
    ...
  ]
}
Items are numbered 1..n without gaps. Each item's guideline levels are distinct
integers in [0, max_point] and must include max_point itself."""

SCORES_FORMAT = """{
  "scores": [
    {"company_id": "<id exactly as given>", "item_scores": [<integer per rubric item, in item order>]},
    ...
  ]
}
Include every company exactly once."""

PERIOD_SCORES_FORMAT = """{
  "scores": [{"period": "<period label exactly as given>", "score": <number 0..10>}, ...]
}
Include every period exactly once."""


def qa_text(question_id: str, question: str, answer: str) -> str:
    return f"[{question_id}] Q: {question}\nA: {answer}"


def company_block(company_id: str, qa: list[tuple[str, str, str]]) -> str:
    body = "\n".join(qa_text(*x) for x in qa)
    return f"{COMPANY_OPEN.format(company_id=company_id)}\n{body}\n{COMPANY_CLOSE}"


def period_block(label: str, qa: list[tuple[str, str, str]]) -> str:
    body = "\n".join(qa_text(*x) for x in qa)
    return f"{PERIOD_OPEN.format(label=label)}\n{body}\n{PERIOD_CLOSE}"


def rubric_block(rubric_id: str, rubric_json: str) -> str:
    return f"{RUBRIC_OPEN.format(rubric_id=rubric_id)}\n```json\n{rubric_json}\n```\n{RUBRIC_CLOSE}"


def yearly_rubric_prompt(company_blocks: list[str]) -> str:
    return "\n\n".join([YEARLY_INSTRUCTION, YEARLY_SCOPE_NOTE, *company_blocks])


def master_rubric_prompt(rubrics: list[tuple[str, str]]) -> str:
    head = MASTER_INSTRUCTION.format(n=len(rubrics))
    return "\n\n".join([head, *(rubric_block(rid, doc) for rid, doc in rubrics)])


def scoring_prompt(rubric_id: str, rubric_json: str, company_blocks: list[str]) -> str:
    return "\n\n".join([rubric_block(rubric_id, rubric_json), SCORING_INSTRUCTION, *company_blocks])


def naive_prompt(period_blocks: list[str]) -> str:
    return "\n\n".join([NAIVE_INSTRUCTION, *period_blocks])
