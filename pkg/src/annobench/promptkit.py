"""The 3x3 persona/clause prompt matrix and per-publication user messages.

Prompt text lives in data/prompts.txt, shipped with the package, so the
matrix can be extended or swapped without code changes. Every annotation run
records the file's checksum; editing the file invalidates all cache keys.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import NamedTuple

PERSONAS = ("reader", "researcher", "expert")
CLAUSES = ("base", "uncertainty", "uncertainty_clarity")

_CLAUSE_SUFFIX = {"base": "base", "uncertainty": "U", "uncertainty_clarity": "UC"}
_SUFFIX_CLAUSE = {v: k for k, v in _CLAUSE_SUFFIX.items()}

USER_TEMPLATE = "Title: {title}\nAbstract: {abstract}"

# Character budget for one publication's user message.
DEFAULT_CHAR_BUDGET = 8000

_PROMPT_RESOURCE = "prompts.txt"
_SECTION_RE = re.compile(r"^\[(?P<id>[^\]]+)\]\s*$")


class PromptError(ValueError):
    """Raised for unknown prompt ids or a malformed prompt file."""


@dataclass(frozen=True)
class PromptSpec:
    """One cell of the persona x clause matrix."""

    persona: str
    clause: str

    def __post_init__(self) -> None:
        if self.persona not in PERSONAS:
            raise PromptError(f"unknown persona {self.persona!r}; expected one of {PERSONAS}")
        if self.clause not in CLAUSES:
            raise PromptError(f"unknown clause {self.clause!r}; expected one of {CLAUSES}")

    @property
    def id(self) -> str:
        return f"{self.persona}+{_CLAUSE_SUFFIX[self.clause]}"


@dataclass(frozen=True)
class RenderedPrompt:
    """System prompt text plus the user-message template it pairs with."""

    system_text: str
    user_template: str = USER_TEMPLATE


class UserMessage(NamedTuple):
    text: str
    truncated: bool


def prompt_matrix() -> list[PromptSpec]:
    """All nine cells in (reader, researcher, expert) x (base, +U, +UC) order."""
    return [PromptSpec(p, c) for p in PERSONAS for c in CLAUSES]


def spec_from_id(prompt_id: str) -> PromptSpec:
    persona, _, suffix = prompt_id.partition("+")
    if persona in PERSONAS and suffix in _SUFFIX_CLAUSE:
        return PromptSpec(persona, _SUFFIX_CLAUSE[suffix])
    known = ", ".join(spec.id for spec in prompt_matrix())
    raise PromptError(f"unknown prompt id {prompt_id!r}; known ids: {known}")


def _prompt_file_bytes() -> bytes:
    return resources.files("annobench.data").joinpath(_PROMPT_RESOURCE).read_bytes()


@lru_cache(maxsize=1)
def _load_prompts() -> dict[str, str]:
    texts: dict[str, str] = {}
    current: str | None = None
    lines: list[str] = []

    def flush() -> None:
        if current is not None:
            text = "\n".join(lines).strip()
            if not text:
                raise PromptError(f"prompt {current!r} has no text")
            texts[current] = text

    for raw in _prompt_file_bytes().decode("utf-8").splitlines():
        match = _SECTION_RE.match(raw)
        if match:
            flush()
            current = match.group("id")
            if current in texts:
                raise PromptError(f"duplicate prompt id {current!r}")
            lines = []
        elif current is not None:
            lines.append(raw)
        elif raw.strip() and not raw.lstrip().startswith("#"):
            raise PromptError(f"text before first prompt header: {raw!r}")
    flush()

    missing = {spec.id for spec in prompt_matrix()} - set(texts)
    if missing:
        raise PromptError(f"prompt file missing ids: {sorted(missing)}")
    return texts


@lru_cache(maxsize=1)
def prompt_file_checksum() -> str:
    """SHA-256 of the shipped prompt file, recorded in run manifests."""
    return hashlib.sha256(_prompt_file_bytes()).hexdigest()


def render_prompt(spec: PromptSpec) -> RenderedPrompt:
    """Resolve a matrix cell to its exact system prompt text."""
    return RenderedPrompt(system_text=_load_prompts()[spec.id])


def build_user_message(pub, char_budget: int = DEFAULT_CHAR_BUDGET) -> UserMessage:
    """Format one publication as the user turn.

    Whitespace runs (including newlines) inside title and abstract collapse
    to single spaces; the result is hard-truncated at char_budget with the
    truncation flagged.
    """
    title = " ".join(str(pub.title).split())
    if not title:
        raise PromptError("publication title must be non-empty")
    abstract = " ".join(str(pub.abstract).split())
    text = USER_TEMPLATE.format(title=title, abstract=abstract)
    if len(text) > char_budget:
        return UserMessage(text[:char_budget], True)
    return UserMessage(text, False)
