"""Corpus construction: ingestion, gold labeling, filtering, and splits."""

from .ingest import (
    DuplicatePositionError,
    IngestError,
    IngestResult,
    ingest_arxiv,
    ingest_openalex,
    invert_abstract,
)
from .io import (
    DATASET_COLUMNS,
    corpus_hash,
    corpus_index,
    label_pairs,
    publication_from_dict,
    publication_to_dict,
    read_corpus,
    read_dataset,
    write_corpus,
    write_dataset,
)
from .labeling import (
    AI_CATEGORIES,
    AI_CATEGORY_ORDER,
    AI_CONCEPTS,
    SUBFIELD_LEVEL,
    assign_arxiv_label,
    assign_concept_label,
)
from .openalex_http import OpenAlexPager, PageError
from .ops import FilterResult, dedupe, filter_corpus, sample, split
from .types import (
    EMPTY_ABSTRACT_FLAG,
    Concept,
    CorpusError,
    Dataset,
    Label,
    LabeledExample,
    LabelValue,
    Provenance,
    Publication,
    SplitRatios,
)

__all__ = [
    "AI_CATEGORIES",
    "AI_CATEGORY_ORDER",
    "AI_CONCEPTS",
    "DATASET_COLUMNS",
    "Concept",
    "CorpusError",
    "Dataset",
    "DuplicatePositionError",
    "EMPTY_ABSTRACT_FLAG",
    "FilterResult",
    "IngestError",
    "IngestResult",
    "Label",
    "LabelValue",
    "LabeledExample",
    "OpenAlexPager",
    "PageError",
    "Provenance",
    "Publication",
    "SUBFIELD_LEVEL",
    "SplitRatios",
    "assign_arxiv_label",
    "assign_concept_label",
    "corpus_hash",
    "corpus_index",
    "dedupe",
    "filter_corpus",
    "ingest_arxiv",
    "ingest_openalex",
    "invert_abstract",
    "label_pairs",
    "publication_from_dict",
    "publication_to_dict",
    "read_corpus",
    "read_dataset",
    "sample",
    "split",
    "write_corpus",
    "write_dataset",
]
