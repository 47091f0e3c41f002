"""Domain types for scholarly publication corpora.

A corpus is a list of Publication records drawn from arXiv, OpenAlex, or a
conference listing. Labels are binary (AI / NonAI) and carry provenance so
downstream evaluation can tell rule-derived gold labels apart from chatbot
or classifier predictions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum


class CorpusError(ValueError):
    """Raised when a record violates a corpus invariant."""


class LabelValue(str, Enum):
    AI = "AI"
    NON_AI = "NonAI"


class Provenance(str, Enum):
    ARXIV_RULE = "arxiv_rule"
    CONCEPT_RULE = "concept_rule"
    CHATBOT = "chatbot"
    CLASSIFIER = "classifier"


# Provenances whose labels come with a model-assigned confidence.
_CONFIDENCE_PROVENANCES = frozenset({Provenance.CHATBOT, Provenance.CLASSIFIER})

SOURCES = ("arxiv", "openalex", "conference")

# Flag set when a record legitimately has no abstract text.
EMPTY_ABSTRACT_FLAG = "empty_abstract"


@dataclass(frozen=True)
class Label:
    """A binary relevance label with provenance.

    confidence must be present exactly for chatbot/classifier labels and
    absent for rule-derived ones. `flagged` marks degenerate inputs (e.g. a
    concept-rule label assigned to a record with no concepts).
    """

    value: LabelValue
    provenance: Provenance
    confidence: float | None = None
    flagged: bool = False

    def __post_init__(self) -> None:
        value = LabelValue(self.value)
        provenance = Provenance(self.provenance)
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "provenance", provenance)
        needs_confidence = provenance in _CONFIDENCE_PROVENANCES
        if needs_confidence and self.confidence is None:
            raise CorpusError(f"{provenance.value} labels require a confidence")
        if not needs_confidence and self.confidence is not None:
            raise CorpusError(f"{provenance.value} labels must not carry a confidence")
        if self.confidence is not None and not 0.0 <= self.confidence <= 1.0:
            raise CorpusError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class Concept:
    """A topic assignment with taxonomy level and assignment score."""

    name: str
    level: int
    score: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise CorpusError(f"concept score {self.score} outside [0, 1] for {self.name!r}")


@dataclass
class Publication:
    """One scholarly record.

    `categories` is ordered: the first entry is the author's primary arXiv
    category, the rest are cross-posts. An empty abstract is only valid when
    the record carries the empty-abstract flag.
    """

    id: str
    source: str
    title: str
    abstract: str
    year: int
    categories: list[str] = field(default_factory=list)
    concepts: list[Concept] = field(default_factory=list)
    venue: str | None = None
    citation_count: int | None = None
    flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.id:
            raise CorpusError("publication id must be non-empty")
        if self.source not in SOURCES:
            raise CorpusError(f"unknown source {self.source!r}; expected one of {SOURCES}")
        if not self.title:
            raise CorpusError(f"{self.id}: title must be non-empty")
        if not self.abstract and EMPTY_ABSTRACT_FLAG not in self.flags:
            raise CorpusError(f"{self.id}: empty abstract without {EMPTY_ABSTRACT_FLAG} flag")
        if self.year < 1900:
            raise CorpusError(f"{self.id}: implausible year {self.year}")
        if self.citation_count is not None and self.citation_count < 0:
            raise CorpusError(f"{self.id}: negative citation count")

    @property
    def primary_category(self) -> str | None:
        return self.categories[0] if self.categories else None


@dataclass(frozen=True)
class SplitRatios:
    """Train/test/validation fractions; must sum to 1."""

    train: float = 0.70
    test: float = 0.15
    validation: float = 0.15

    def __post_init__(self) -> None:
        for name, value in (("train", self.train), ("test", self.test), ("validation", self.validation)):
            if not 0.0 < value < 1.0:
                raise CorpusError(f"split ratio {name}={value} outside (0, 1)")
        if not math.isclose(self.train + self.test + self.validation, 1.0, abs_tol=1e-9):
            raise CorpusError("split ratios must sum to 1")


DEFAULT_SPLIT_RATIOS = SplitRatios()

SPLIT_NAMES = ("train", "test", "validation")


@dataclass(frozen=True)
class LabeledExample:
    """A (publication, label) pairing by id, optionally assigned to a split."""

    publication_id: str
    label: Label
    split: str | None = None

    def __post_init__(self) -> None:
        if self.split is not None and self.split not in SPLIT_NAMES:
            raise CorpusError(f"unknown split {self.split!r}")


@dataclass
class Dataset:
    """A named list of labeled examples backed by some corpus."""

    name: str
    examples: list[LabeledExample] = field(default_factory=list)

    def validate(self, corpus_ids: set[str] | None = None) -> None:
        """Check split-local id uniqueness and, if given, corpus membership."""
        seen: dict[str | None, set[str]] = {}
        for ex in self.examples:
            ids = seen.setdefault(ex.split, set())
            if ex.publication_id in ids:
                raise CorpusError(
                    f"{self.name}: duplicate publication {ex.publication_id!r} in split {ex.split!r}"
                )
            ids.add(ex.publication_id)
            if corpus_ids is not None and ex.publication_id not in corpus_ids:
                raise CorpusError(f"{self.name}: {ex.publication_id!r} missing from backing corpus")

    def __len__(self) -> int:
        return len(self.examples)
