"""Command-line pipeline: ingest -> label -> sample/split -> annotate -> train
-> eval -> report.

Every command is re-runnable: identical inputs and seed produce identical
outputs (live annotation excepted). Annotation runs with malformed responses
still exit 0 and surface the malformed count in the manifest; transport
aborts (bad credentials) exit 2.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

from . import annotator, classifier, corpus, evalkit, promptkit
from .config import ConfigError, RunConfig, parse_config_file

PROG = "annobench"


class CliError(ValueError):
    pass


def _load_venues(path: str | None) -> list[str]:
    if path is None:
        text = resources.files("annobench.data").joinpath("venues.txt").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    venues = [line.strip() for line in text.splitlines()]
    return [v for v in venues if v and not v.startswith("#")]


def _require_file(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise CliError(f"input file not found: {path}")
    return p


def _emit(report, fmt: str, output: str | None) -> None:
    data = evalkit.emit_report(report, fmt)
    if output and output != "-":
        Path(output).write_bytes(data)
    else:
        sys.stdout.write(data.decode("utf-8"))


def _read_records(path: str) -> list[annotator.AnnotationRecord]:
    records = []
    with open(_require_file(path), encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(annotator.AnnotationRecord.from_dict(json.loads(line)))
    return records


def _parse_ratios(text: str) -> corpus.SplitRatios:
    try:
        train, test, validation = (float(part) for part in text.split(","))
    except ValueError as exc:
        raise CliError(f"ratios must be three comma-separated numbers, got {text!r}") from exc
    return corpus.SplitRatios(train=train, test=test, validation=validation)


def _config(args: argparse.Namespace, **extra) -> RunConfig:
    file_values = parse_config_file(_require_file(args.config)) if args.config else {}
    overrides = {"seed": args.seed, "output_dir": args.output_dir}
    overrides.update(extra)
    return RunConfig.from_sources(file_values, overrides)


def _build_backend(spec: str, base_url: str | None) -> annotator.ChatBackend:
    if spec == "live":
        return annotator.LiveChatBackend(base_url=base_url or annotator.backends.DEFAULT_BASE_URL)
    kind, _, arg = spec.partition(":")
    if kind == "replay" and arg:
        return annotator.ReplayBackend(_require_file(arg))
    if kind == "mock" and arg:
        return annotator.ScriptedMockBackend.from_file(_require_file(arg))
    raise CliError(f"unknown backend {spec!r}; expected live, replay:<fixture>, or mock:<script>")


# --- commands ----------------------------------------------------------------


def cmd_ingest(args: argparse.Namespace) -> int:
    cfg = _config(args)
    if args.from_api:
        if args.source != "openalex":
            raise CliError("--from-api is only available for the openalex source")
        if not args.mailto:
            raise CliError("--from-api requires --mailto for the polite pool")
        pager = corpus.OpenAlexPager(
            mailto=args.mailto, filter_expr=args.filter, per_page=args.per_page
        )
        result = corpus.ingest_openalex(pager.iter_pages(cursor=args.cursor, max_pages=args.max_pages))
    elif args.input is None:
        raise CliError("an input file is required unless --from-api is given")
    elif args.source == "arxiv":
        with open(_require_file(args.input), encoding="utf-8") as fh:
            result = corpus.ingest_arxiv(fh)
    else:
        with open(_require_file(args.input), encoding="utf-8") as fh:
            records = (json.loads(line) for line in fh if line.strip())
            result = corpus.ingest_openalex(records)
    pubs = result.publications
    for err in result.errors:
        print(f"skipped {err.location}: {err.reason}", file=sys.stderr)

    dropped_line = ""
    if args.min_year is not None or args.min_citations is not None:
        filtered = corpus.filter_corpus(
            pubs,
            min_year=args.min_year if args.min_year is not None else cfg.min_year,
            min_citations=args.min_citations if args.min_citations is not None else cfg.min_citations,
        )
        pubs = filtered.publications
        dropped_line = f", filtered {filtered.dropped_year} by year / {filtered.dropped_citations} by citations"
    if args.dedupe:
        pubs, dropped = corpus.dedupe(pubs)
        dropped_line += f", deduped {dropped}"

    count = corpus.write_corpus(pubs, args.output)
    print(f"wrote {count} publications to {args.output} ({result.skipped} skipped{dropped_line})")
    return 0


def cmd_label(args: argparse.Namespace) -> int:
    pubs = corpus.read_corpus(_require_file(args.corpus))
    assign = corpus.assign_arxiv_label if args.rule == "arxiv" else corpus.assign_concept_label
    examples = [corpus.LabeledExample(pub.id, assign(pub)) for pub in pubs]
    dataset = corpus.Dataset(name=args.rule, examples=examples)
    dataset.validate()
    corpus.write_dataset(dataset, args.output)
    ai = sum(1 for ex in examples if ex.label.value is corpus.LabelValue.AI)
    print(f"labeled {len(examples)} publications ({ai} AI, {len(examples) - ai} NonAI) -> {args.output}")
    return 0


def cmd_sample(args: argparse.Namespace) -> int:
    cfg = _config(args)
    pubs = corpus.read_corpus(_require_file(args.corpus))
    chosen = corpus.sample(pubs, args.n, seed=cfg.seed)
    corpus.write_corpus(chosen, args.output)
    print(f"sampled {len(chosen)} of {len(pubs)} publications (seed {cfg.seed}) -> {args.output}")
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    cfg = _config(args, ratios=args.ratios)
    dataset = corpus.read_dataset(_require_file(args.dataset))
    ratios = _parse_ratios(cfg.ratios)
    train, test, validation = corpus.split(dataset, ratios=ratios, seed=cfg.seed, stratify=args.stratify)
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for part in (train, test, validation):
        name = part.name.rsplit("/", 1)[-1]
        corpus.write_dataset(part, out_dir / f"{name}.csv")
    print(
        f"split {len(dataset)} examples into {len(train)}/{len(test)}/{len(validation)} "
        f"(train/test/validation, seed {cfg.seed}) -> {out_dir}"
    )
    return 0


def cmd_annotate(args: argparse.Namespace) -> int:
    cfg = _config(
        args,
        model=args.model,
        prompt=args.prompt,
        backend=args.backend,
        base_url=args.base_url,
        cache_dir=args.cache_dir,
        concurrency=args.concurrency,
        char_budget=args.char_budget,
        requests_per_minute=args.requests_per_minute,
    )
    pubs = corpus.read_corpus(_require_file(args.corpus))
    if args.limit is not None:
        pubs = pubs[: args.limit]
    spec = promptkit.spec_from_id(cfg.prompt)
    params = annotator.ChatParams(
        model=cfg.model,
        temperature=args.temperature if args.temperature is not None else 0.0,
        top_p=args.top_p if args.top_p is not None else 0.1,
    )

    if args.dry_run:
        cost = annotator.estimate_cost(pubs, spec, params, char_budget=cfg.char_budget)
        print(
            f"dry run: {len(pubs)} publications, prompt {spec.id}, model {params.model}, "
            f"estimated cost {cost:.3f} units, 0 requests sent"
        )
        return 0

    if not cfg.backend:
        raise CliError("--backend is required unless --dry-run is given")
    backend = _build_backend(cfg.backend, cfg.base_url)
    cache = annotator.AnnotationCache(cfg.cache_dir)
    limiter = (
        annotator.RequestBudget(cfg.requests_per_minute) if cfg.requests_per_minute else None
    )
    result = annotator.annotate_batch(
        pubs,
        spec,
        params,
        backend,
        cache=cache,
        concurrency=cfg.concurrency,
        char_budget=cfg.char_budget,
        reask_malformed=args.reask_malformed,
        rate_limiter=limiter,
    )

    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records_path = out_dir / "records.jsonl"
    with open(records_path, "w", encoding="utf-8") as fh:
        for record in result.records:
            fh.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")

    manifest = annotator.build_run_manifest(
        result, spec, params, backend.name, corpus.corpus_hash(pubs), config=cfg.as_dict()
    )
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )

    predictions = corpus.Dataset(
        name="predictions",
        examples=[
            corpus.LabeledExample(r.publication_id, r.parsed_label)
            for r in result.records
            if r.parsed_label is not None
        ],
    )
    corpus.write_dataset(predictions, out_dir / "predictions.csv")

    counts = result.counts()
    print(
        f"annotated {counts['total']} publications "
        f"({counts['parsed']} parsed, {counts['malformed']} malformed, "
        f"{counts['transport_errors']} transport errors, {counts['cache_hits']} cache hits) -> {out_dir}"
    )
    return 0


def _classifier_config(args: argparse.Namespace, seed: int) -> classifier.TrainConfig:
    base = classifier.TrainConfig()
    return classifier.TrainConfig(
        dim=args.dim if args.dim is not None else base.dim,
        epochs=args.epochs if args.epochs is not None else base.epochs,
        learning_rate=args.learning_rate if args.learning_rate is not None else base.learning_rate,
        l2=args.l2 if args.l2 is not None else base.l2,
        batch_size=args.batch_size if args.batch_size is not None else base.batch_size,
        seed=seed,
        threshold=args.threshold if args.threshold is not None else base.threshold,
        max_train_samples=args.max_train_samples
        if args.max_train_samples is not None
        else base.max_train_samples,
        max_eval_samples=args.max_eval_samples
        if args.max_eval_samples is not None
        else base.max_eval_samples,
        class_weighting=args.class_weighting,
    )


def cmd_train(args: argparse.Namespace) -> int:
    cfg = _config(args)
    index = corpus.corpus_index(corpus.read_corpus(_require_file(args.corpus)))
    train_pairs = corpus.label_pairs(corpus.read_dataset(_require_file(args.labels)), index)
    val_pairs = None
    if args.val_labels:
        val_pairs = corpus.label_pairs(corpus.read_dataset(_require_file(args.val_labels)), index)

    config = _classifier_config(args, cfg.seed)
    model = classifier.train(train_pairs, val_pairs, config)
    classifier.save_model(model, args.output)
    if args.log:
        classifier.save_training_log(model.history, args.log)

    last = model.history[-1]
    val_text = "" if last.val_accuracy is None else f", val accuracy {last.val_accuracy:.4f}"
    print(
        f"trained on {min(len(train_pairs), config.max_train_samples)} examples, "
        f"{config.epochs} epochs, final loss {last.loss:.6f}{val_text} -> {args.output}"
    )
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    model = classifier.load_model(_require_file(args.model))
    index = corpus.corpus_index(corpus.read_corpus(_require_file(args.corpus)))
    pairs = corpus.label_pairs(corpus.read_dataset(_require_file(args.dataset)), index)
    report = classifier.evaluate(model, pairs, slice=args.slice)
    _emit(report, args.format, args.output)
    return 0


def _predictions_by_id(args: argparse.Namespace) -> dict[str, corpus.Label]:
    if getattr(args, "records", None):
        records = _read_records(args.records)
        return {r.publication_id: r.parsed_label for r in records if r.parsed_label is not None}
    dataset = corpus.read_dataset(_require_file(args.predictions))
    return {ex.publication_id: ex.label for ex in dataset.examples}


def cmd_report(args: argparse.Namespace) -> int:
    if args.kind == "metrics":
        doc = json.loads(_require_file(args.input).read_text(encoding="utf-8"))
        report = evalkit.metrics_report_from_json(doc)
        _emit(report, args.format, args.output)
        return 0

    if args.kind == "venue":
        predicted = _predictions_by_id(args)
        index = corpus.corpus_index(corpus.read_corpus(_require_file(args.corpus)))
        venues = _load_venues(args.venues)
        rows = []
        for pub_id, label in predicted.items():
            pub = index.get(pub_id)
            if pub is None:
                raise CliError(f"prediction for unknown publication {pub_id!r}")
            if not pub.venue:
                raise CliError(f"publication {pub_id!r} has no venue")
            rows.append((pub.venue, label))
        report = evalkit.venue_accuracy(rows, venues)
        _emit(report, args.format, args.output)
        return 0

    if args.kind == "category":
        predicted = _predictions_by_id(args)
        gold = corpus.read_dataset(_require_file(args.gold))
        index = corpus.corpus_index(corpus.read_corpus(_require_file(args.corpus)))
        records = []
        for ex in gold.examples:
            if ex.publication_id in predicted:
                records.append((index[ex.publication_id], predicted[ex.publication_id], ex.label))
        report = evalkit.category_accuracy(records)
        _emit(report, args.format, args.output)
        return 0

    if args.kind == "medians":
        records = _read_records(args.records)
        gold = {
            ex.publication_id: ex.label
            for ex in corpus.read_dataset(_require_file(args.gold)).examples
        }
        entries = [
            (r.parsed_label, gold[r.publication_id], r.probability)
            for r in records
            if r.parsed_label is not None and r.publication_id in gold
        ]
        report = evalkit.MedianReport(evalkit.median_probability_by_cell(entries))
        _emit(report, args.format, args.output)
        return 0

    if args.kind == "prompt-matrix":
        cells: dict[tuple[str, str], float] = {}
        import csv as _csv

        with open(_require_file(args.cells), encoding="utf-8", newline="") as fh:
            for row in _csv.DictReader(fh):
                cells[(row["model"], row["prompt_id"])] = float(row["accuracy"])
        report = evalkit.prompt_matrix_report(cells)
        _emit(report, args.format, args.output)
        return 0

    raise CliError(f"unknown report kind {args.kind!r}")


# --- parser ------------------------------------------------------------------


def _add_global_flags(parser: argparse.ArgumentParser, suppress: bool = False) -> None:
    # Subparsers get SUPPRESS defaults so a flag placed before the
    # subcommand is not clobbered by the subparser's default.
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="key = value config file; flags override it")
    parser.add_argument("--seed", type=int, default=default, help="random seed (default 42)")
    parser.add_argument("--output-dir", default=default, help="directory for multi-file outputs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Build labeled publication corpora, annotate them with a chat model, "
        "train a baseline classifier, and emit evaluation reports.",
    )
    _add_global_flags(parser)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse raw arXiv/OpenAlex records into a corpus file")
    p.add_argument("source", choices=("arxiv", "openalex"))
    p.add_argument("input", nargs="?", help="line-delimited JSON input (omit with --from-api)")
    p.add_argument("--output", "-o", required=True, help="corpus JSONL to write")
    p.add_argument("--min-year", type=int, help="drop publications older than this year")
    p.add_argument("--min-citations", type=int, help="drop publications cited fewer times")
    p.add_argument("--dedupe", action="store_true", help="drop exact title+abstract duplicates")
    p.add_argument("--from-api", action="store_true", help="page the OpenAlex works endpoint")
    p.add_argument("--mailto", help="contact address for the OpenAlex polite pool")
    p.add_argument("--filter", help="OpenAlex filter expression")
    p.add_argument("--cursor", default="*", help="resume cursor for --from-api")
    p.add_argument("--max-pages", type=int, help="stop --from-api after this many pages")
    p.add_argument("--per-page", type=int, default=200)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("label", help="assign rule-based gold labels to a corpus")
    p.add_argument("corpus")
    p.add_argument("--rule", choices=("arxiv", "concept"), required=True)
    p.add_argument("--output", "-o", required=True, help="dataset CSV to write")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("sample", help="uniform sample without replacement")
    p.add_argument("corpus")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--output", "-o", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("split", help="partition a dataset into train/test/validation")
    p.add_argument("dataset")
    p.add_argument("--ratios", help="train,test,validation fractions (default 0.70,0.15,0.15)")
    p.add_argument("--stratify", action="store_true")
    p.set_defaults(func=cmd_split, ratios=None)

    p = sub.add_parser("annotate", help="annotate a corpus through a chat-completion backend")
    p.add_argument("corpus")
    p.add_argument("--prompt", help="prompt id, e.g. expert+UC")
    p.add_argument("--model", help="chat model name")
    p.add_argument("--backend", help="live | replay:<fixture.jsonl> | mock:<script.jsonl>")
    p.add_argument("--base-url", help="chat-completions endpoint base URL")
    p.add_argument("--cache-dir")
    p.add_argument("--limit", type=int, help="annotate only the first N publications")
    p.add_argument("--concurrency", type=int)
    p.add_argument("--char-budget", type=int, help="user message character budget")
    p.add_argument("--temperature", type=float)
    p.add_argument("--top-p", type=float)
    p.add_argument("--requests-per-minute", type=int)
    p.add_argument("--reask-malformed", action="store_true", help="retry unparseable responses once")
    p.add_argument("--dry-run", action="store_true", help="print a cost estimate and exit")
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("train", help="train the baseline classifier")
    p.add_argument("--corpus", required=True)
    p.add_argument("--labels", required=True, help="training dataset CSV")
    p.add_argument("--val-labels", help="validation dataset CSV")
    p.add_argument("--output", "-o", required=True, help="model file to write")
    p.add_argument("--log", help="training log CSV to write")
    p.add_argument("--dim", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--l2", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--max-train-samples", type=int)
    p.add_argument("--max-eval-samples", type=int)
    p.add_argument("--class-weighting", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model on a gold dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--slice", help="slice descriptor recorded in the report")
    p.add_argument("--format", choices=evalkit.FORMATS, default="json")
    p.add_argument("--output", "-o", help="write report here instead of stdout")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="emit evaluation tables")
    kinds = p.add_subparsers(dest="kind", required=True)

    k = kinds.add_parser("metrics", help="re-emit a metrics JSON document")
    k.add_argument("--input", required=True)

    k = kinds.add_parser("venue", help="per-venue predicted-AI rate")
    k.add_argument("--predictions", help="predictions dataset CSV")
    k.add_argument("--records", help="annotation records JSONL")
    k.add_argument("--corpus", required=True)
    k.add_argument("--venues", help="venue list file (default: shipped top-conference list)")

    k = kinds.add_parser("category", help="per-arXiv-category labeling accuracy")
    k.add_argument("--predictions")
    k.add_argument("--records")
    k.add_argument("--gold", required=True)
    k.add_argument("--corpus", required=True)

    k = kinds.add_parser("medians", help="median parsed probability per confusion cell")
    k.add_argument("--records", required=True)
    k.add_argument("--gold", required=True)

    k = kinds.add_parser("prompt-matrix", help="model x prompt accuracy table with clause gain")
    k.add_argument("--cells", required=True, help="CSV with model,prompt_id,accuracy columns")

    for k_parser in kinds.choices.values():
        k_parser.add_argument("--format", choices=evalkit.FORMATS, default="markdown")
        k_parser.add_argument("--output", "-o")
        _add_global_flags(k_parser, suppress=True)
    p.set_defaults(func=cmd_report)

    for sub_parser in sub.choices.values():
        if sub_parser is not p:
            _add_global_flags(sub_parser, suppress=True)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except annotator.AnnotationAborted as exc:
        print(f"{PROG}: {exc}", file=sys.stderr)
        return 2
    except (
        CliError,
        ConfigError,
        corpus.CorpusError,
        corpus.PageError,
        annotator.AnnotatorError,
        classifier.ClassifierError,
        evalkit.EvalError,
        promptkit.PromptError,
        OSError,
        json.JSONDecodeError,
    ) as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
