"""Acceptance suite: offline, fixture-driven checks of the whole pipeline.

Each test prints one PASS line (run with -s to see them). Expected values
are either hand-computed from the fixture construction or checked against
independent brute-force oracles written here.
"""

import json
import math
import random
import time

import numpy as np
import pytest

from annobench.annotator import ChatParams, ParseError, estimate_cost, parse_response
from annobench.classifier import TrainConfig, logistic_loss, save_model, train
from annobench.cli import main
from annobench.corpus import (
    AI_CATEGORIES,
    Dataset,
    Label,
    LabeledExample,
    LabelValue,
    Provenance,
    assign_arxiv_label,
    split,
)
from annobench.evalkit import confusion, metrics, prompt_matrix_report
from annobench.promptkit import PromptSpec, prompt_matrix, render_prompt
from conftest import make_pub

AI = LabelValue.AI
NON = LabelValue.NON_AI


def ok(line):
    print(f"ACCEPTANCE PASS: {line}")


# 1 ------------------------------------------------------------------------------


def test_criterion_1_metrics_match_brute_force_recount():
    rng = random.Random(1234)
    started = time.monotonic()
    for _ in range(1000):
        n = rng.randint(1, 500)
        pairs = [(rng.choice((AI, NON)), rng.choice((AI, NON))) for _ in range(n)]
        counts = confusion(pairs)

        tp = sum(1 for p, g in pairs if p is AI and g is AI)
        fp = sum(1 for p, g in pairs if p is AI and g is NON)
        fn = sum(1 for p, g in pairs if p is NON and g is AI)
        tn = sum(1 for p, g in pairs if p is NON and g is NON)
        assert (counts.tp, counts.fp, counts.fn, counts.tn) == (tp, fp, fn, tn)

        report = metrics(counts)
        assert report.accuracy == pytest.approx((tp + tn) / n, abs=1e-12)
        if tp + fp:
            assert report.precision == pytest.approx(tp / (tp + fp), abs=1e-12)
        else:
            assert report.precision is None
        if tp + fn:
            assert report.recall == pytest.approx(tp / (tp + fn), abs=1e-12)
        else:
            assert report.recall is None
        if report.precision is not None and report.recall is not None:
            expected_f1 = (
                0.0
                if report.precision + report.recall == 0
                else 2 * report.precision * report.recall / (report.precision + report.recall)
            )
            assert report.f1 == pytest.approx(expected_f1, abs=1e-12)
    elapsed = time.monotonic() - started
    assert elapsed < 5.0, f"metrics oracle took {elapsed:.2f}s"
    ok(f"metrics oracle: 1000 random lists matched exactly in {elapsed:.2f}s")


# 2 ------------------------------------------------------------------------------


def test_criterion_2_parser_fixtures_and_fuzz(data_dir):
    rows = [
        json.loads(line)
        for line in (data_dir / "parse_fixtures.jsonl").read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    assert len(rows) == 50
    for row in rows:
        if "error" in row:
            with pytest.raises(ParseError) as excinfo:
                parse_response(row["raw"])
            assert excinfo.value.category == row["error"], row["raw"]
        else:
            label, probability = parse_response(row["raw"])
            assert label is LabelValue(row["label"]) and probability == row["probability"], row["raw"]

    rng = random.Random(2024)
    parsed = failed = 0
    for _ in range(100_000):
        raw = bytes(rng.randrange(256) for _ in range(rng.randrange(0, 80))).decode("latin-1")
        try:
            _, probability = parse_response(raw)
        except ParseError:
            failed += 1
            continue
        parsed += 1
        assert 0.0 <= probability <= 1.0
    ok(f"parser: 50/50 fixtures exact; 100000 fuzz strings safe ({parsed} parsed, {failed} rejected)")


# 3 ------------------------------------------------------------------------------


def test_criterion_3_label_rule_matches_set_intersection_oracle():
    seven = {"cs.AI", "cs.CL", "cs.CV", "cs.LG", "stat.ML", "cs.MA", "cs.RO"}
    assert AI_CATEGORIES == frozenset(seven)
    rng = random.Random(777)
    other = ["math.OC", "hep-th", "q-bio.NC", "cs.DS", "econ.EM", "astro-ph.CO", "math.ST"]
    agreements = 0
    for i in range(200):
        cats = rng.sample(sorted(seven), rng.randint(0, 2)) + rng.sample(other, rng.randint(0, 2))
        rng.shuffle(cats)
        pub = make_pub(pub_id=f"r{i}", categories=cats)
        expected = AI if set(cats) & seven else NON  # the one-line oracle
        got = assign_arxiv_label(pub).value
        assert got is expected
        if set(cats) & seven:
            assert got is AI
        agreements += 1
    assert agreements == 200
    ok("label rule: 200/200 synthetic records agree with the set-intersection oracle")


# 4 ------------------------------------------------------------------------------


def test_criterion_4_split_contract():
    for n in (10, 100, 1000, 12345):
        label = Label(AI, Provenance.ARXIV_RULE)
        dataset = Dataset("d", [LabeledExample(f"p{i}", label) for i in range(n)])
        train_part, test_part, val_part = split(dataset, seed=42)

        expected_test = math.floor(0.15 * n)
        expected_val = math.floor(0.15 * n)
        expected_train = n - expected_test - expected_val
        assert expected_train >= math.floor(0.70 * n)  # remainder goes to train
        assert (len(train_part), len(test_part), len(val_part)) == (
            expected_train,
            expected_test,
            expected_val,
        )

        ids = [ex.publication_id for part in (train_part, test_part, val_part) for ex in part.examples]
        assert len(ids) == n and len(set(ids)) == n  # exhaustive, disjoint

        again = split(dataset, seed=42)
        for part_a, part_b in zip((train_part, test_part, val_part), again):
            assert [e.publication_id for e in part_a.examples] == [
                e.publication_id for e in part_b.examples
            ]
    ok("split contract: floor + remainder-to-train, disjoint, exhaustive, seed-deterministic for N in {10, 100, 1000, 12345}")


# 5 ------------------------------------------------------------------------------

# Hand-computed from the fixture construction (20 pubs: 5 TP, 3 FP, 4 FN, 8 TN):
EXPECTED_OVERALL_ACCURACY = 13 / 20
EXPECTED_CATEGORIES = {
    "cs.AI": (2, 0.5),
    "cs.CL": (1, 1.0),
    "cs.CV": (2, 0.5),
    "cs.LG": (3, 1 / 3),
    "cs.MA": (1, 0.0),
    "cs.RO": (1, 1.0),
    "stat.ML": (1, 1.0),
}
EXPECTED_NONE_BUCKET = (11, 8 / 11)
EXPECTED_MEDIANS = {"TP": 0.95, "FP": 0.9, "TN": 0.2, "FN": 0.2}


def run_replay_pipeline(data_dir, workdir):
    workdir.mkdir(parents=True, exist_ok=True)
    replay = data_dir / "replay"
    gold_csv = workdir / "gold.csv"
    assert main(["label", str(replay / "corpus.jsonl"), "--rule", "arxiv", "-o", str(gold_csv)]) == 0
    run_dir = workdir / "run"
    assert (
        main(
            [
                "annotate",
                str(replay / "corpus.jsonl"),
                "--prompt",
                "expert+UC",
                "--model",
                "gpt-3.5-turbo",
                "--backend",
                f"replay:{replay / 'responses.jsonl'}",
                "--cache-dir",
                str(workdir / "cache"),
                "--output-dir",
                str(run_dir),
            ]
        )
        == 0
    )
    outputs = {}
    for kind, extra in (
        ("category", ["--gold", str(gold_csv), "--corpus", str(replay / "corpus.jsonl")]),
        ("medians", ["--gold", str(gold_csv)]),
    ):
        for fmt in ("json", "csv", "markdown"):
            out = workdir / f"{kind}.{fmt}"
            assert (
                main(
                    [
                        "report",
                        kind,
                        "--records",
                        str(run_dir / "records.jsonl"),
                        *extra,
                        "--format",
                        fmt,
                        "-o",
                        str(out),
                    ]
                )
                == 0
            )
            outputs[f"{kind}.{fmt}"] = out.read_bytes()
    outputs["records"] = (run_dir / "records.jsonl").read_bytes()
    return outputs


def test_criterion_5_replay_end_to_end(data_dir, tmp_path):
    first = run_replay_pipeline(data_dir, tmp_path / "one")
    second = run_replay_pipeline(data_dir, tmp_path / "two")
    assert first == second  # byte-identical reports across runs

    category = json.loads(first["category.json"].decode("utf-8"))
    assert category["overall"]["num_papers"] == 20
    assert category["overall"]["accuracy"] == pytest.approx(EXPECTED_OVERALL_ACCURACY, abs=1e-4)
    by_name = {row["category"]: row for row in category["categories"]}
    for code, (n, accuracy) in EXPECTED_CATEGORIES.items():
        assert by_name[code]["num_papers"] == n, code
        assert by_name[code]["accuracy"] == pytest.approx(accuracy, abs=1e-4), code
    assert by_name["None"]["num_papers"] == EXPECTED_NONE_BUCKET[0]
    assert by_name["None"]["accuracy"] == pytest.approx(EXPECTED_NONE_BUCKET[1], abs=1e-4)

    medians = json.loads(first["medians.json"].decode("utf-8"))
    assert medians == EXPECTED_MEDIANS
    ok(
        "replay end-to-end: overall accuracy 0.65, category table and medians "
        "(TP 0.95 / FP 0.9 / TN 0.2 / FN 0.2) match hand computation; reports byte-identical"
    )


# 6 ------------------------------------------------------------------------------


def test_criterion_6_prompt_matrix():
    specs = prompt_matrix()
    assert len(specs) == 9
    texts = [render_prompt(spec).system_text for spec in specs]
    assert len(set(texts)) == 9  # pairwise distinct
    for spec, text in zip(specs, texts):
        if spec.clause == "base":
            assert "Some papers may be in STEM fields" not in text
        else:
            assert "Some papers may be in STEM fields" in text

    cells = {
        ("gpt-3.5-turbo", "reader+base"): 0.79,
        ("gpt-3.5-turbo", "researcher+base"): 0.76,
        ("gpt-3.5-turbo", "expert+base"): 0.78,
        ("gpt-3.5-turbo", "reader+U"): 0.91,
        ("gpt-3.5-turbo", "reader+UC"): 0.92,
        ("gpt-3.5-turbo", "researcher+U"): 0.91,
        ("gpt-3.5-turbo", "researcher+UC"): 0.92,
        ("gpt-3.5-turbo", "expert+U"): 0.91,
        ("gpt-3.5-turbo", "expert+UC"): 0.92,
    }
    report = prompt_matrix_report(cells)
    gain = report.rows[0].mean_gain_points
    assert gain == pytest.approx(13.8, abs=0.05)
    ok(f"prompt matrix: 9 distinct prompts, caveat clauses present, mean clause gain {gain:.2f} points")


# 7 ------------------------------------------------------------------------------


def test_criterion_7_baseline_classifier(tmp_path):
    rng = random.Random(31)
    vocab_a = [f"pos{i}" for i in range(60)]
    vocab_b = [f"neg{i}" for i in range(60)]
    pairs = []
    for i in range(2000):
        positive = i % 2 == 0
        vocab = vocab_a if positive else vocab_b
        words = [rng.choice(vocab) for _ in range(rng.randint(6, 14))]
        pub = make_pub(pub_id=f"d{i}", title=" ".join(words[:3]), abstract=" ".join(words[3:]), categories=[])
        pairs.append((pub, Label(AI if positive else NON, Provenance.ARXIV_RULE)))

    config = TrainConfig(dim=2**16, epochs=6, learning_rate=0.5, l2=1e-5, seed=77)
    started = time.monotonic()
    model = train(pairs[:1400], pairs[1400:1700], config)
    elapsed = time.monotonic() - started
    assert elapsed < 60.0, f"training took {elapsed:.1f}s"
    val_accuracy = model.history[-1].val_accuracy
    assert val_accuracy >= 0.99

    # analytic vs central finite-difference gradients, relative error < 1e-5
    grad_rng = np.random.default_rng(5)
    for _ in range(5):
        dim = int(grad_rng.integers(4, 33))
        n = int(grad_rng.integers(2, 17))
        dense = grad_rng.normal(size=(n, dim))
        X = []
        for row in dense:
            idx = np.nonzero(row)[0]
            from annobench.classifier import FeatureVector

            X.append(FeatureVector(idx.astype(np.int64), row[idx], dim))
        y = grad_rng.integers(0, 2, size=n).astype(np.float64)
        w = grad_rng.normal(scale=0.5, size=dim)
        b = float(grad_rng.normal())
        _, grad_w, grad_b = logistic_loss(X, y, w, b, 1e-3, want_grad=True)
        h = 1e-6
        for j in range(dim):
            w_p, w_m = w.copy(), w.copy()
            w_p[j] += h
            w_m[j] -= h
            numeric = (logistic_loss(X, y, w_p, b, 1e-3) - logistic_loss(X, y, w_m, b, 1e-3)) / (2 * h)
            assert abs(numeric - grad_w[j]) / max(abs(numeric), abs(grad_w[j]), 1e-8) < 1e-5
        numeric_b = (logistic_loss(X, y, w, b + h, 1e-3) - logistic_loss(X, y, w, b - h, 1e-3)) / (2 * h)
        assert abs(numeric_b - grad_b) / max(abs(numeric_b), abs(grad_b), 1e-8) < 1e-5

    path_a, path_b = tmp_path / "a.json", tmp_path / "b.json"
    save_model(model, path_a)
    save_model(train(pairs[:1400], pairs[1400:1700], config), path_b)
    assert path_a.read_bytes() == path_b.read_bytes()
    ok(
        f"baseline classifier: val accuracy {val_accuracy:.4f} in {elapsed:.1f}s, "
        "gradients match finite differences, model files bit-identical"
    )


# 8 ------------------------------------------------------------------------------


def test_criterion_8_cost_estimator_ratio():
    pubs = [make_pub(pub_id=f"p{i}", abstract="lorem ipsum " * (i + 1)) for i in range(40)]
    spec = PromptSpec("expert", "uncertainty_clarity")
    cheap = estimate_cost(pubs, spec, ChatParams(model="gpt-3.5-turbo"))
    pricey = estimate_cost(pubs, spec, ChatParams(model="gpt-4"))
    ratio = pricey / cheap
    assert ratio == pytest.approx(20.0, abs=1e-9)
    ok(f"cost estimator: model cost ratio {ratio:.12f}")
