"""Measurement: confusion counts, metrics, sliced accuracies, report files.

The positive class is AI everywhere. Ratios with a zero denominator are
reported as absent (None / null / blank), never coerced to 0 or 1. All
emitters are byte-deterministic given equal inputs: fixed orderings, 2
decimal places for table cells, 4 for metric files.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .corpus.labeling import AI_CATEGORIES, AI_CATEGORY_ORDER
from .corpus.types import Label, LabelValue, Publication
from .promptkit import prompt_matrix

CELLS = ("TP", "FP", "TN", "FN")

FORMATS = ("csv", "json", "markdown")


class EvalError(ValueError):
    pass


class SchemaError(EvalError):
    """A metrics JSON document does not match the shared report schema."""


def _value(label) -> LabelValue:
    if isinstance(label, Label):
        return label.value
    return LabelValue(label)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise EvalError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def confusion(pairs: Iterable[tuple[object, object]]) -> ConfusionCounts:
    """Count confusion cells over (predicted, gold) pairs, AI positive."""
    tp = fp = fn = tn = 0
    n = 0
    for predicted, gold in pairs:
        n += 1
        p_ai = _value(predicted) is LabelValue.AI
        g_ai = _value(gold) is LabelValue.AI
        if p_ai and g_ai:
            tp += 1
        elif p_ai:
            fp += 1
        elif g_ai:
            fn += 1
        else:
            tn += 1
    if n == 0:
        raise EvalError("cannot build a confusion matrix from zero pairs")
    return ConfusionCounts(tp, fp, fn, tn)


def cell_of(predicted, gold) -> str:
    p_ai = _value(predicted) is LabelValue.AI
    g_ai = _value(gold) is LabelValue.AI
    if p_ai:
        return "TP" if g_ai else "FP"
    return "FN" if g_ai else "TN"


@dataclass(frozen=True)
class MetricsReport:
    """Confusion counts with the four derived metrics.

    split_counts optionally carries per-split label totals (used by
    classifier training reports); it travels through the JSON form only.
    """

    counts: ConfusionCounts
    accuracy: float | None
    precision: float | None
    recall: float | None
    f1: float | None
    slice: str | None = None
    split_counts: dict | None = None

    def to_json_dict(self) -> dict:
        doc = {
            "slice": self.slice,
            "counts": {"tp": self.counts.tp, "fp": self.counts.fp, "fn": self.counts.fn, "tn": self.counts.tn},
            "accuracy": _round4(self.accuracy),
            "precision": _round4(self.precision),
            "recall": _round4(self.recall),
            "f1": _round4(self.f1),
        }
        if self.split_counts is not None:
            doc["split_counts"] = self.split_counts
        return doc


def metrics(counts: ConfusionCounts, slice: str | None = None) -> MetricsReport:
    """Accuracy, precision, recall, F1 from confusion counts.

    F1 is the harmonic mean of precision and recall; it is absent whenever
    either of them is, and 0 when both are 0 (the limit value, matching
    2tp/(2tp+fp+fn)).
    """
    if counts.total == 0:
        raise EvalError("metrics need at least one evaluated pair")
    accuracy = (counts.tp + counts.tn) / counts.total
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else None
    recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else None
    if precision is None or recall is None:
        f1 = None
    elif precision + recall == 0:
        f1 = 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return MetricsReport(counts, accuracy, precision, recall, f1, slice=slice)


@dataclass(frozen=True)
class Accuracy:
    n: int
    accuracy: float


@dataclass
class CategoryAccuracy:
    """Per-arXiv-category labeling accuracy with multi-membership.

    A publication contributes to every AI category it carries (primary and
    cross-posts alike); publications carrying none land in the "None"
    bucket. The overall figure counts each publication exactly once.
    """

    categories: dict[str, Accuracy]
    none_bucket: Accuracy | None
    overall: Accuracy
    order: tuple[str, ...] = AI_CATEGORY_ORDER


def category_accuracy(
    records: Iterable[tuple[Publication, object, object]],
    ai_categories: frozenset[str] = AI_CATEGORIES,
    order: Sequence[str] = AI_CATEGORY_ORDER,
) -> CategoryAccuracy:
    per_cat: dict[str, list[bool]] = {}
    none_hits: list[bool] = []
    seen: dict[str, bool] = {}
    for pub, predicted, gold in records:
        correct = _value(predicted) is _value(gold)
        if pub.id not in seen:
            seen[pub.id] = correct
        carried = [c for c in pub.categories if c in ai_categories]
        if carried:
            for cat in dict.fromkeys(carried):
                per_cat.setdefault(cat, []).append(correct)
        else:
            none_hits.append(correct)
    if not seen:
        raise EvalError("category accuracy needs at least one record")

    def acc(hits: list[bool]) -> Accuracy:
        return Accuracy(len(hits), sum(hits) / len(hits))

    ordered = {cat: acc(per_cat[cat]) for cat in order if cat in per_cat}
    for cat in sorted(per_cat):
        if cat not in ordered:
            ordered[cat] = acc(per_cat[cat])
    overall_hits = list(seen.values())
    return CategoryAccuracy(
        categories=ordered,
        none_bucket=acc(none_hits) if none_hits else None,
        overall=Accuracy(len(overall_hits), sum(overall_hits) / len(overall_hits)),
        order=tuple(order),
    )


class UnknownVenueError(EvalError):
    def __init__(self, venue: str, venues: Sequence[str]) -> None:
        super().__init__(f"unknown venue {venue!r}; configured venues: {', '.join(venues)}")


@dataclass
class VenueAccuracy:
    """Fraction of conference papers predicted AI, per venue and overall.

    Membership in a configured venue is the ground truth (every paper
    counts as AI), so accuracy is simply the predicted-AI rate.
    """

    venues: dict[str, Accuracy]
    overall: Accuracy


def venue_accuracy(
    records: Iterable[tuple[str, object]],
    venues: Sequence[str],
) -> VenueAccuracy:
    hits: dict[str, list[bool]] = {venue: [] for venue in venues}
    for venue, predicted in records:
        if venue not in hits:
            raise UnknownVenueError(venue, venues)
        hits[venue].append(_value(predicted) is LabelValue.AI)
    union = [h for per in hits.values() for h in per]
    if not union:
        raise EvalError("venue accuracy needs at least one record")
    per_venue = {
        venue: Accuracy(len(per), sum(per) / len(per)) for venue, per in hits.items() if per
    }
    return VenueAccuracy(per_venue, Accuracy(len(union), sum(union) / len(union)))


def median_probability_by_cell(
    entries: Iterable[tuple[object, object, float]],
) -> dict[str, float]:
    """Median parsed probability per confusion cell; empty cells absent.

    Even-sized cells take the mean of the middle pair.
    """
    by_cell: dict[str, list[float]] = {}
    for predicted, gold, probability in entries:
        by_cell.setdefault(cell_of(predicted, gold), []).append(probability)
    return {cell: statistics.median(by_cell[cell]) for cell in CELLS if cell in by_cell}


@dataclass
class PromptMatrixReport:
    """Accuracy per prompt cell by model, plus the clause-gain summary.

    mean_gain_points is the mean accuracy of the +U/+UC cells minus the mean
    of the base cells, in percentage points; absent when either side is
    missing entirely.
    """

    prompt_ids: tuple[str, ...]
    rows: list["PromptMatrixRow"] = field(default_factory=list)


@dataclass
class PromptMatrixRow:
    model: str
    accuracies: dict[str, float]
    mean_gain_points: float | None


def cells_from_reports(reports: Iterable[MetricsReport]) -> dict[tuple[str, str], float]:
    """Build the (model, prompt_id) -> accuracy mapping from sliced reports.

    Slices follow the "model/prompt_id" convention.
    """
    cells: dict[tuple[str, str], float] = {}
    for report in reports:
        if not report.slice or "/" not in report.slice:
            raise EvalError(f"prompt cell report needs a model/prompt slice, got {report.slice!r}")
        if report.accuracy is None:
            raise EvalError(f"prompt cell {report.slice!r} has no accuracy")
        model, _, prompt_id = report.slice.partition("/")
        cells[(model, prompt_id)] = report.accuracy
    return cells


def prompt_matrix_report(
    cells: Mapping[tuple[str, str], float] | Iterable[MetricsReport],
) -> PromptMatrixReport:
    if not isinstance(cells, Mapping):
        cells = cells_from_reports(cells)
    prompt_ids = tuple(spec.id for spec in prompt_matrix())
    known = set(prompt_ids)
    for model, prompt_id in cells:
        if prompt_id not in known:
            raise EvalError(f"unknown prompt id {prompt_id!r} in matrix cell for {model!r}")
    report = PromptMatrixReport(prompt_ids=prompt_ids)
    for model in sorted({model for model, _ in cells}):
        accuracies = {
            prompt_id: cells[(model, prompt_id)]
            for prompt_id in prompt_ids
            if (model, prompt_id) in cells
        }
        base = [acc for pid, acc in accuracies.items() if pid.endswith("+base")]
        clause = [acc for pid, acc in accuracies.items() if not pid.endswith("+base")]
        gain = None
        if base and clause:
            gain = (sum(clause) / len(clause) - sum(base) / len(base)) * 100.0
        report.rows.append(PromptMatrixRow(model, accuracies, gain))
    return report


@dataclass
class MedianReport:
    """Wrapper so per-cell medians can go through emit_report."""

    cells: dict[str, float]


# --- emission ---------------------------------------------------------------


def _round4(x: float | None) -> float | None:
    return None if x is None else round(x, 4)


def _cell2(x: float | None) -> str:
    return "" if x is None else f"{x:.2f}"


def _metric4(x: float | None) -> str:
    return "" if x is None else f"{x:.4f}"


def _csv_line(fields: Iterable[object]) -> str:
    return ",".join(str(f) for f in fields)


def _markdown_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join(" --- " for _ in header) + "|"]
    lines += ["| " + " | ".join(row) + " |" for row in rows]
    return "\n".join(lines) + "\n"


def _json_bytes(doc: object) -> bytes:
    return (json.dumps(doc, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def emit_report(report, fmt: str) -> bytes:
    """Serialize any report object to csv, json, or markdown bytes."""
    if fmt not in FORMATS:
        raise EvalError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    if isinstance(report, MetricsReport):
        return _emit_metrics(report, fmt)
    if isinstance(report, CategoryAccuracy):
        return _emit_category(report, fmt)
    if isinstance(report, VenueAccuracy):
        return _emit_venue(report, fmt)
    if isinstance(report, PromptMatrixReport):
        return _emit_prompt_matrix(report, fmt)
    if isinstance(report, MedianReport):
        return _emit_medians(report, fmt)
    raise EvalError(f"cannot emit report of type {type(report).__name__}")


def _emit_metrics(report: MetricsReport, fmt: str) -> bytes:
    if fmt == "json":
        return _json_bytes(report.to_json_dict())
    c = report.counts
    if fmt == "csv":
        lines = [
            _csv_line(["slice", "tp", "fp", "fn", "tn", "accuracy", "precision", "recall", "f1"]),
            _csv_line(
                [
                    report.slice or "",
                    c.tp,
                    c.fp,
                    c.fn,
                    c.tn,
                    _metric4(report.accuracy),
                    _metric4(report.precision),
                    _metric4(report.recall),
                    _metric4(report.f1),
                ]
            ),
        ]
        return ("\n".join(lines) + "\n").encode("utf-8")
    rows = [
        ["TP / FP / FN / TN", f"{c.tp} / {c.fp} / {c.fn} / {c.tn}"],
        ["Accuracy", _metric4(report.accuracy)],
        ["Precision", _metric4(report.precision)],
        ["Recall", _metric4(report.recall)],
        ["F1", _metric4(report.f1)],
    ]
    if report.split_counts:
        for split in sorted(report.split_counts):
            counts = report.split_counts[split]
            rows.append(
                [f"{split} split (total / AI / NonAI)",
                 f"{counts.get('total', 0)} / {counts.get('AI', 0)} / {counts.get('NonAI', 0)}"]
            )
    title = report.slice or "metrics"
    return _markdown_table([title, "Value"], rows).encode("utf-8")


def _emit_category(report: CategoryAccuracy, fmt: str) -> bytes:
    entries = [(cat, acc) for cat, acc in report.categories.items()]
    if report.none_bucket is not None:
        entries.append(("None", report.none_bucket))
    if fmt == "json":
        doc = {
            "categories": [
                {"category": cat, "num_papers": acc.n, "accuracy": _round4(acc.accuracy)}
                for cat, acc in entries
            ],
            "overall": {"num_papers": report.overall.n, "accuracy": _round4(report.overall.accuracy)},
        }
        return _json_bytes(doc)
    if fmt == "csv":
        lines = [_csv_line(["category", "num_papers", "accuracy"])]
        lines += [_csv_line([cat, acc.n, _cell2(acc.accuracy)]) for cat, acc in entries]
        lines.append(_csv_line(["Overall", report.overall.n, _cell2(report.overall.accuracy)]))
        return ("\n".join(lines) + "\n").encode("utf-8")
    rows = [[cat, str(acc.n), _cell2(acc.accuracy)] for cat, acc in entries]
    rows.append(["Overall", str(report.overall.n), _cell2(report.overall.accuracy)])
    return _markdown_table(["Category", "Num. Papers", "Accuracy"], rows).encode("utf-8")


def _emit_venue(report: VenueAccuracy, fmt: str) -> bytes:
    if fmt == "json":
        doc = {
            "venues": [
                {"venue": venue, "num_papers": acc.n, "accuracy": _round4(acc.accuracy)}
                for venue, acc in report.venues.items()
            ],
            "overall": {"num_papers": report.overall.n, "accuracy": _round4(report.overall.accuracy)},
        }
        return _json_bytes(doc)
    if fmt == "csv":
        lines = [_csv_line(["venue", "num_papers", "accuracy"])]
        lines += [
            _csv_line([venue, acc.n, _cell2(acc.accuracy)]) for venue, acc in report.venues.items()
        ]
        lines.append(_csv_line(["Overall", report.overall.n, _cell2(report.overall.accuracy)]))
        return ("\n".join(lines) + "\n").encode("utf-8")
    rows = [[venue, str(acc.n), _cell2(acc.accuracy)] for venue, acc in report.venues.items()]
    rows.append(["Overall", str(report.overall.n), _cell2(report.overall.accuracy)])
    return _markdown_table(["Venue", "Num. Papers", "Accuracy"], rows).encode("utf-8")


def _emit_prompt_matrix(report: PromptMatrixReport, fmt: str) -> bytes:
    if fmt == "json":
        doc = {
            "prompt_ids": list(report.prompt_ids),
            "models": [
                {
                    "model": row.model,
                    "accuracies": {
                        pid: _round4(row.accuracies[pid])
                        for pid in report.prompt_ids
                        if pid in row.accuracies
                    },
                    "mean_gain_points": _round4(row.mean_gain_points),
                }
                for row in report.rows
            ],
        }
        return _json_bytes(doc)
    header = ["model", *report.prompt_ids, "mean_gain_points"]
    table_rows = [
        [
            row.model,
            *[_cell2(row.accuracies.get(pid)) for pid in report.prompt_ids],
            _cell2(row.mean_gain_points),
        ]
        for row in report.rows
    ]
    if fmt == "csv":
        lines = [_csv_line(header)] + [_csv_line(row) for row in table_rows]
        return ("\n".join(lines) + "\n").encode("utf-8")
    return _markdown_table(header, table_rows).encode("utf-8")


def _emit_medians(report: MedianReport, fmt: str) -> bytes:
    cells = [(cell, report.cells[cell]) for cell in CELLS if cell in report.cells]
    if fmt == "json":
        return _json_bytes({cell: _round4(value) for cell, value in cells})
    if fmt == "csv":
        lines = [_csv_line(["cell", "median_probability"])]
        lines += [_csv_line([cell, _cell2(value)]) for cell, value in cells]
        return ("\n".join(lines) + "\n").encode("utf-8")
    rows = [[cell, _cell2(value)] for cell, value in cells]
    return _markdown_table(["Cell", "Median Probability"], rows).encode("utf-8")


# --- metrics JSON ingestion ---------------------------------------------------


def metrics_report_from_json(doc: dict) -> MetricsReport:
    """Parse and validate a metrics JSON document (shared report schema).

    Used to ingest externally produced metrics (e.g. the transformer
    adapter's output) with no special-casing.
    """
    if not isinstance(doc, dict):
        raise SchemaError("metrics document must be a JSON object")
    counts = doc.get("counts")
    if not isinstance(counts, dict):
        raise SchemaError("metrics document missing counts object")
    cells = {}
    for cell in ("tp", "fp", "fn", "tn"):
        value = counts.get(cell)
        if not isinstance(value, int) or isinstance(value, bool) or value < 0:
            raise SchemaError(f"counts.{cell} must be a non-negative integer")
        cells[cell] = value
    values = {}
    for name in ("accuracy", "precision", "recall", "f1"):
        if name not in doc:
            raise SchemaError(f"metrics document missing {name}")
        value = doc[name]
        if value is not None:
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise SchemaError(f"{name} must be a number or null")
            if not 0.0 <= value <= 1.0:
                raise SchemaError(f"{name}={value} outside [0, 1]")
        values[name] = value
    slice_value = doc.get("slice")
    if slice_value is not None and not isinstance(slice_value, str):
        raise SchemaError("slice must be a string or null")
    split_counts = doc.get("split_counts")
    if split_counts is not None and not isinstance(split_counts, dict):
        raise SchemaError("split_counts must be an object")
    return MetricsReport(
        counts=ConfusionCounts(**cells),
        accuracy=values["accuracy"],
        precision=values["precision"],
        recall=values["recall"],
        f1=values["f1"],
        slice=slice_value,
        split_counts=split_counts,
    )


def build_run_report(manifest: dict, slices: Mapping[str, object]) -> bytes:
    """Bundle a run manifest plus named report slices into one JSON document."""
    doc: dict = {"manifest": manifest, "reports": {}}
    for name in sorted(slices):
        report = slices[name]
        doc["reports"][name] = json.loads(emit_report(report, "json").decode("utf-8"))
    return _json_bytes(doc)
