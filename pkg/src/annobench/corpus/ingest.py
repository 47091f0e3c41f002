"""Ingestion of arXiv snapshot and OpenAlex works records.

Both ingestors are forgiving: a malformed record produces a per-record error
entry (with its line number or work id) and never aborts the stream.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from .types import EMPTY_ABSTRACT_FLAG, Concept, CorpusError, Publication

_YEAR_RE = re.compile(r"\b(1[89]\d{2}|20\d{2})\b")


class DuplicatePositionError(CorpusError):
    """Two words of an inverted abstract index claim the same position."""

    def __init__(self, position: int) -> None:
        super().__init__(f"position {position} claimed by more than one word")
        self.position = position


@dataclass(frozen=True)
class IngestError:
    """Where and why one input record was skipped."""

    location: str
    reason: str


@dataclass
class IngestResult:
    publications: list[Publication] = field(default_factory=list)
    errors: list[IngestError] = field(default_factory=list)

    @property
    def skipped(self) -> int:
        return len(self.errors)


def _extract_year(text: str) -> int | None:
    match = _YEAR_RE.search(text)
    return int(match.group(1)) if match else None


def _arxiv_year(record: Mapping[str, Any]) -> int | None:
    """Year of the earliest version, falling back to update/date fields."""
    versions = record.get("versions")
    if isinstance(versions, list) and versions:
        first = versions[0]
        created = first.get("created") if isinstance(first, Mapping) else None
        if isinstance(created, str):
            year = _extract_year(created)
            if year is not None:
                return year
    for key in ("update_date", "date"):
        value = record.get(key)
        if isinstance(value, str):
            year = _extract_year(value)
            if year is not None:
                return year
    return None


def ingest_arxiv(lines: Iterable[str]) -> IngestResult:
    """Parse a line-delimited arXiv metadata snapshot.

    Each line is one JSON record with at least id, title, abstract,
    categories (whitespace-separated string), and a date field (versions,
    update_date, or date). Categories keep their input order: first entry is
    the primary category, the rest are cross-posts.
    """
    result = IngestResult()
    for line_no, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        where = f"line {line_no}"
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            result.errors.append(IngestError(where, f"invalid JSON: {exc.msg}"))
            continue
        if not isinstance(record, dict):
            result.errors.append(IngestError(where, "record is not a JSON object"))
            continue
        pub_id = str(record.get("id") or "").strip()
        if not pub_id:
            result.errors.append(IngestError(where, "missing id"))
            continue
        title = _squash(record.get("title"))
        if not title:
            result.errors.append(IngestError(where, "missing title"))
            continue
        raw_categories = record.get("categories")
        categories = str(raw_categories).split() if raw_categories else []
        if not categories:
            result.errors.append(IngestError(where, "missing categories"))
            continue
        year = _arxiv_year(record)
        if year is None:
            result.errors.append(IngestError(where, "no parseable date"))
            continue
        abstract = _squash(record.get("abstract"))
        flags = () if abstract else (EMPTY_ABSTRACT_FLAG,)
        try:
            pub = Publication(
                id=pub_id,
                source="arxiv",
                title=title,
                abstract=abstract,
                year=year,
                categories=categories,
                flags=flags,
            )
        except CorpusError as exc:
            result.errors.append(IngestError(where, str(exc)))
            continue
        result.publications.append(pub)
    return result


def invert_abstract(index: Mapping[str, Sequence[int]]) -> str:
    """Rebuild abstract text from a word -> positions inverted index.

    Words are placed at their positions and joined with single spaces; gaps
    in the position sequence collapse. A position claimed by two words is an
    error naming that position.
    """
    placed: list[tuple[int, str]] = []
    seen: set[int] = set()
    for word, positions in index.items():
        for pos in positions:
            if pos < 0:
                raise CorpusError(f"negative position {pos} for word {word!r}")
            if pos in seen:
                raise DuplicatePositionError(pos)
            seen.add(pos)
            placed.append((pos, word))
    placed.sort(key=lambda pair: pair[0])
    return " ".join(word for _, word in placed)


def _openalex_works(records_or_pages: Iterable[Mapping[str, Any]]) -> Iterable[Mapping[str, Any]]:
    """Flatten an iterable of works or of API pages ({"results": [...]})."""
    for item in records_or_pages:
        if "results" in item and isinstance(item["results"], list):
            yield from item["results"]
        else:
            yield item


def ingest_openalex(records_or_pages: Iterable[Mapping[str, Any]]) -> IngestResult:
    """Parse OpenAlex works, reconstructing abstracts from inverted indexes.

    Accepts either raw work objects or whole API pages; page order is
    preserved. A missing inverted index yields a flagged empty-abstract
    record rather than an error.
    """
    result = IngestResult()
    for n, work in enumerate(_openalex_works(records_or_pages), start=1):
        pub_id = str(work.get("id") or "").strip()
        where = pub_id or f"work {n}"
        title = _squash(work.get("title") or work.get("display_name"))
        if not title:
            result.errors.append(IngestError(where, "missing title"))
            continue
        year = work.get("publication_year")
        if not isinstance(year, int):
            result.errors.append(IngestError(where, "missing publication_year"))
            continue
        if not pub_id:
            result.errors.append(IngestError(where, "missing id"))
            continue
        flags: tuple[str, ...] = ()
        abstract = _squash(work.get("abstract"))
        if not abstract:
            inv = work.get("abstract_inverted_index")
            if isinstance(inv, Mapping):
                try:
                    abstract = _squash(invert_abstract(inv))
                except CorpusError as exc:
                    result.errors.append(IngestError(where, f"bad inverted index: {exc}"))
                    continue
        if not abstract:
            flags = (EMPTY_ABSTRACT_FLAG,)
        concepts = []
        for c in work.get("concepts") or []:
            name = c.get("display_name")
            if not name:
                continue
            try:
                concepts.append(Concept(name=str(name), level=int(c.get("level", 0)), score=float(c.get("score", 0.0))))
            except (TypeError, ValueError, CorpusError):
                continue
        cited = work.get("cited_by_count")
        venue = work.get("venue")
        try:
            pub = Publication(
                id=pub_id,
                source="openalex",
                title=title,
                abstract=abstract,
                year=year,
                concepts=concepts,
                venue=str(venue) if venue else None,
                citation_count=int(cited) if isinstance(cited, int) else None,
                flags=flags,
            )
        except CorpusError as exc:
            result.errors.append(IngestError(where, str(exc)))
            continue
        result.publications.append(pub)
    return result


def _squash(value: Any) -> str:
    """Collapse whitespace runs in a possibly-None string field."""
    if value is None:
        return ""
    return " ".join(str(value).split())
