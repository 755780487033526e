"""Extraction and validation of machine-readable documents from model replies."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Any, Callable

_FENCE_RE = re.compile(r"```(?:json|JSON)?[ \t]*\n(.*?)```", re.DOTALL)


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class Schema:
    """A named document contract.

    ``parse`` receives the decoded JSON value and returns the domain object,
    raising :class:`SchemaError` with a human-readable reason otherwise. The
    reason is fed back to the model on retry.
    """

    name: str
    description: str
    parse: Callable[[Any], Any]


def extract_document(text: str) -> Any:
    """Return the first well-formed JSON object or array in ``text``.

    Fenced blocks are tried first, then a left-to-right scan for ``{``/``[``.
    """
    for m in _FENCE_RE.finditer(text):
        try:
            return json.loads(m.group(1))
        except json.JSONDecodeError:
            continue
    decoder = json.JSONDecoder()
    for i, ch in enumerate(text):
        if ch in "{[":
            try:
                doc, _ = decoder.raw_decode(text, i)
            except json.JSONDecodeError:
                continue
            return doc
    raise SchemaError("no well-formed JSON document found in reply")


def output_instruction(schema: Schema) -> str:
    return (
        "\n\nOUTPUT FORMAT: reply with exactly one JSON document inside a ```json "
        f"fenced block, following the '{schema.name}' format:\n{schema.description}"
    )


def feedback_suffix(error: str) -> str:
    return (
        "\n\nYOUR PREVIOUS REPLY WAS REJECTED: "
        f"{error}\nReply again with a corrected JSON document only."
    )
