"""Canonical corpus and dataset file formats.

Corpus: line-delimited JSON, one Publication per line, UTF-8, stable field
order. Dataset: CSV with columns publication_id,label,provenance,confidence,
split. Both round-trip exactly.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path
from typing import Iterable, Sequence

from .types import (
    Concept,
    CorpusError,
    Dataset,
    Label,
    LabeledExample,
    LabelValue,
    Provenance,
    Publication,
)

DATASET_COLUMNS = ("publication_id", "label", "provenance", "confidence", "split")


def publication_to_dict(pub: Publication) -> dict:
    return {
        "id": pub.id,
        "source": pub.source,
        "title": pub.title,
        "abstract": pub.abstract,
        "year": pub.year,
        "categories": list(pub.categories),
        "concepts": [{"name": c.name, "level": c.level, "score": c.score} for c in pub.concepts],
        "venue": pub.venue,
        "citation_count": pub.citation_count,
        "flags": list(pub.flags),
    }


def publication_from_dict(record: dict) -> Publication:
    return Publication(
        id=record["id"],
        source=record["source"],
        title=record["title"],
        abstract=record.get("abstract", ""),
        year=record["year"],
        categories=list(record.get("categories") or []),
        concepts=[
            Concept(c["name"], int(c["level"]), float(c["score"]))
            for c in record.get("concepts") or []
        ],
        venue=record.get("venue"),
        citation_count=record.get("citation_count"),
        flags=tuple(record.get("flags") or ()),
    )


def corpus_lines(pubs: Iterable[Publication]) -> Iterable[str]:
    for pub in pubs:
        yield json.dumps(publication_to_dict(pub), ensure_ascii=False)


def write_corpus(pubs: Iterable[Publication], path: str | Path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for line in corpus_lines(pubs):
            fh.write(line + "\n")
            count += 1
    return count


def read_corpus(path: str | Path) -> list[Publication]:
    pubs = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                pubs.append(publication_from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, CorpusError) as exc:
                raise CorpusError(f"{path}: line {line_no}: {exc}") from exc
    return pubs


def corpus_index(pubs: Iterable[Publication]) -> dict[str, Publication]:
    index: dict[str, Publication] = {}
    for pub in pubs:
        if pub.id in index:
            raise CorpusError(f"duplicate publication id {pub.id!r} in corpus")
        index[pub.id] = pub
    return index


def corpus_hash(pubs: Iterable[Publication]) -> str:
    """Content hash of the canonical corpus serialization."""
    digest = hashlib.sha256()
    for line in corpus_lines(pubs):
        digest.update(line.encode("utf-8"))
        digest.update(b"\n")
    return digest.hexdigest()


def dataset_to_csv(dataset: Dataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(DATASET_COLUMNS)
    for ex in dataset.examples:
        conf = "" if ex.label.confidence is None else repr(ex.label.confidence)
        writer.writerow(
            [ex.publication_id, ex.label.value.value, ex.label.provenance.value, conf, ex.split or ""]
        )
    return buf.getvalue()


def write_dataset(dataset: Dataset, path: str | Path) -> None:
    Path(path).write_text(dataset_to_csv(dataset), encoding="utf-8")


def read_dataset(path: str | Path, name: str | None = None) -> Dataset:
    examples: list[LabeledExample] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(DATASET_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise CorpusError(f"{path}: missing dataset columns {sorted(missing)}")
        for row in reader:
            confidence = float(row["confidence"]) if row["confidence"] else None
            label = Label(
                LabelValue(row["label"]),
                Provenance(row["provenance"]),
                confidence=confidence,
            )
            examples.append(
                LabeledExample(row["publication_id"], label, split=row["split"] or None)
            )
    return Dataset(name=name or Path(path).stem, examples=examples)


def label_pairs(
    dataset: Dataset, corpus: dict[str, Publication]
) -> list[tuple[Publication, Label]]:
    """Join dataset rows with their backing publications."""
    pairs = []
    for ex in dataset.examples:
        pub = corpus.get(ex.publication_id)
        if pub is None:
            raise CorpusError(f"{dataset.name}: {ex.publication_id!r} missing from corpus")
        pairs.append((pub, ex.label))
    return pairs
