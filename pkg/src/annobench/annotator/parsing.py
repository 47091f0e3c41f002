"""Tolerant grammar for chatbot annotation responses.

Responses are expected to contain a binary label (AI / Non-AI, any case,
punctuation-insensitive, either side of the score) and one decimal in
[0, 1]. Both must appear within the first 200 characters. Anything else is a
categorized ParseError, never an uncaught exception.
"""

from __future__ import annotations

import re

from ..corpus.types import LabelValue

# Characters of the response considered by the grammar.
PARSE_WINDOW = 200

# Error categories, stable strings used in fixtures and manifests.
MISSING_LABEL = "missing_label"
MISSING_PROBABILITY = "missing_probability"
PROBABILITY_OUT_OF_RANGE = "probability_out_of_range"
CONFLICTING_LABELS = "conflicting_labels"

# "non-ai" is matched before bare "ai" so the suffix of Non-AI is never
# captured as a positive label; \b keeps "aid" / "non-aid" out.
_NON_AI_RE = re.compile(r"non[\s\-]?ai\b", re.IGNORECASE)
_AI_RE = re.compile(r"\bai\b", re.IGNORECASE)
_NUMBER_RE = re.compile(r"\d+\.?\d*|\.\d+")


class ParseError(ValueError):
    def __init__(self, category: str, detail: str) -> None:
        super().__init__(f"{category}: {detail}")
        self.category = category
        self.detail = detail


def parse_response(raw: str, window: int = PARSE_WINDOW) -> tuple[LabelValue, float]:
    """Extract (label, probability) from a raw chatbot response.

    Raises ParseError with category missing_label, missing_probability,
    probability_out_of_range, or conflicting_labels.
    """
    text = raw[:window]

    non_ai_spans = [m.span() for m in _NON_AI_RE.finditer(text)]
    ai_spans = [
        m.span()
        for m in _AI_RE.finditer(text)
        if not any(start <= m.start() and m.end() <= end for start, end in non_ai_spans)
    ]

    if not non_ai_spans and not ai_spans:
        raise ParseError(MISSING_LABEL, "no AI / Non-AI label token found")
    if non_ai_spans and ai_spans:
        raise ParseError(CONFLICTING_LABELS, "response contains both AI and Non-AI labels")
    label = LabelValue.NON_AI if non_ai_spans else LabelValue.AI

    number = _NUMBER_RE.search(text)
    if number is None:
        raise ParseError(MISSING_PROBABILITY, "no decimal probability found")
    value = float(number.group())
    if not 0.0 <= value <= 1.0:
        raise ParseError(PROBABILITY_OUT_OF_RANGE, f"probability {number.group()} outside [0, 1]")

    return label, value
