"""Corpus-level operations: filtering, sampling, splitting, deduplication."""

from __future__ import annotations

import hashlib
import math
import random
import warnings
from dataclasses import dataclass, field
from typing import Sequence

from .types import CorpusError, Dataset, LabeledExample, Publication, SplitRatios

DEFAULT_MIN_YEAR = 2010
DEFAULT_MIN_CITATIONS = 1


@dataclass
class FilterResult:
    publications: list[Publication] = field(default_factory=list)
    dropped_year: int = 0
    dropped_citations: int = 0

    @property
    def dropped(self) -> int:
        return self.dropped_year + self.dropped_citations


def filter_corpus(
    pubs: Sequence[Publication],
    min_year: int = DEFAULT_MIN_YEAR,
    min_citations: int = DEFAULT_MIN_CITATIONS,
) -> FilterResult:
    """Order-preserving subset of pubs meeting year and citation floors.

    The citation floor only applies to records that carry a citation count.
    """
    result = FilterResult()
    for pub in pubs:
        if pub.year < min_year:
            result.dropped_year += 1
            continue
        if pub.citation_count is not None and pub.citation_count < min_citations:
            result.dropped_citations += 1
            continue
        result.publications.append(pub)
    return result


def sample(pubs: Sequence[Publication], n: int, seed: int) -> list[Publication]:
    """Uniform sample of n publications without replacement, seed-determined."""
    if n < 0 or n > len(pubs):
        raise CorpusError(f"cannot sample {n} from {len(pubs)} publications")
    return random.Random(seed).sample(list(pubs), n)


def _allocate(n: int, ratios: SplitRatios) -> tuple[int, int, int]:
    """Floor allocation for test/validation; the remainder goes to train."""
    n_test = math.floor(ratios.test * n)
    n_val = math.floor(ratios.validation * n)
    return n - n_test - n_val, n_test, n_val


def split(
    dataset: Dataset,
    ratios: SplitRatios = SplitRatios(),
    seed: int = 42,
    stratify: bool = False,
) -> tuple[Dataset, Dataset, Dataset]:
    """Partition a dataset into train/test/validation subsets.

    Unstratified by default: a single seeded shuffle followed by floor-sized
    cuts, remainder rows going to train. With stratify=True the same rule is
    applied per label value and the per-label slices concatenated.
    """
    if not dataset.examples:
        raise CorpusError("cannot split an empty dataset")

    rng = random.Random(seed)

    def cut(examples: list[LabeledExample]) -> tuple[list, list, list]:
        order = list(examples)
        rng.shuffle(order)
        n_train, n_test, n_val = _allocate(len(order), ratios)
        return (
            order[:n_train],
            order[n_train : n_train + n_test],
            order[n_train + n_test :],
        )

    if stratify:
        parts: dict[str, list] = {"train": [], "test": [], "validation": []}
        by_label: dict[str, list[LabeledExample]] = {}
        for ex in dataset.examples:
            by_label.setdefault(ex.label.value.value, []).append(ex)
        for value in sorted(by_label):
            tr, te, va = cut(by_label[value])
            parts["train"] += tr
            parts["test"] += te
            parts["validation"] += va
        train_ex, test_ex, val_ex = parts["train"], parts["test"], parts["validation"]
    else:
        train_ex, test_ex, val_ex = cut(dataset.examples)

    if not (train_ex and test_ex and val_ex):
        warnings.warn(
            f"{dataset.name}: split of {len(dataset)} examples left an empty subset",
            stacklevel=2,
        )

    def rebuild(name: str, examples: list[LabeledExample]) -> Dataset:
        return Dataset(
            name=f"{dataset.name}/{name}",
            examples=[LabeledExample(ex.publication_id, ex.label, split=name) for ex in examples],
        )

    return rebuild("train", train_ex), rebuild("test", test_ex), rebuild("validation", val_ex)


def dedupe(pubs: Sequence[Publication]) -> tuple[list[Publication], int]:
    """Drop exact duplicates by lowercased title+abstract hash, keeping firsts."""
    seen: set[str] = set()
    unique: list[Publication] = []
    dropped = 0
    for pub in pubs:
        key = hashlib.sha256(
            (pub.title.lower() + "\x1f" + pub.abstract.lower()).encode("utf-8")
        ).hexdigest()
        if key in seen:
            dropped += 1
            continue
        seen.add(key)
        unique.append(pub)
    return unique, dropped
