"""Rule-based gold labeling for arXiv and OpenAlex publications."""

from __future__ import annotations

from typing import AbstractSet

from .types import Label, LabelValue, Provenance, Publication

# arXiv research-topic codes whose presence (primary or cross-post) marks a
# publication as AI.
AI_CATEGORIES = frozenset({"cs.AI", "cs.CL", "cs.CV", "cs.LG", "stat.ML", "cs.MA", "cs.RO"})

# Display order for per-category reporting.
AI_CATEGORY_ORDER = ("cs.AI", "cs.CL", "cs.CV", "cs.LG", "cs.MA", "cs.RO", "stat.ML")

# OpenAlex sub-field concepts mapped onto the arXiv AI categories (lowercase).
AI_CONCEPTS = frozenset({
    "artificial intelligence",
    "computer vision",
    "machine learning",
    "natural language processing",
})

# Taxonomy granularity at which "top field" is read: level 1 = sub-fields.
SUBFIELD_LEVEL = 1


def assign_arxiv_label(pub: Publication, ai_categories: AbstractSet[str] = AI_CATEGORIES) -> Label:
    """AI iff any of the publication's categories is in the AI set.

    Primary and cross-post categories count equally; an empty category list
    yields NonAI.
    """
    hit = bool(set(pub.categories) & set(ai_categories))
    return Label(LabelValue.AI if hit else LabelValue.NON_AI, Provenance.ARXIV_RULE)


def assign_concept_label(
    pub: Publication,
    ai_concepts: AbstractSet[str] = AI_CONCEPTS,
    level: int = SUBFIELD_LEVEL,
) -> Label:
    """AI iff the top-scoring sub-field concept is in the AI concept set.

    The top concept is the highest-scoring one at the given taxonomy level,
    ties broken by lexicographically smallest name. Records with no concept
    at that level get a flagged NonAI label.
    """
    candidates = [c for c in pub.concepts if c.level == level]
    if not candidates:
        return Label(LabelValue.NON_AI, Provenance.CONCEPT_RULE, flagged=True)
    top = min(candidates, key=lambda c: (-c.score, c.name))
    hit = top.name.lower() in {name.lower() for name in ai_concepts}
    return Label(LabelValue.AI if hit else LabelValue.NON_AI, Provenance.CONCEPT_RULE)
