"""Annotator: response grammar, cache behavior, batch driver, cost model."""

import json
import random

import pytest

from annobench.annotator import (
    AnnotationAborted,
    AnnotationCache,
    AnnotationRecord,
    AuthenticationError,
    BackendResponse,
    ChatParams,
    CostModel,
    ParseError,
    RateLimitError,
    ReplayBackend,
    ScriptedMockBackend,
    ServerError,
    UnknownModelError,
    annotate_batch,
    build_run_manifest,
    cache_key,
    estimate_cost,
    parse_response,
)
from annobench.corpus import LabelValue
from annobench.promptkit import PromptSpec, prompt_file_checksum
from conftest import make_pub

PARAMS = ChatParams(model="gpt-3.5-turbo")
SPEC = PromptSpec("expert", "uncertainty_clarity")


def ok(content="AI, 0.9"):
    return BackendResponse(content=content, input_tokens=100, output_tokens=5, timestamp="t0")


# --- parse_response ------------------------------------------------------------


def test_parse_fixture_file(data_dir):
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
            assert label is LabelValue(row["label"]), row["raw"]
            assert probability == pytest.approx(row["probability"]), row["raw"]


def test_parse_fuzz_random_bytes_never_crash_or_escape_range():
    rng = random.Random(99)
    for _ in range(5000):
        raw = bytes(rng.randrange(256) for _ in range(rng.randrange(0, 120))).decode(
            "latin-1"
        )
        try:
            _, probability = parse_response(raw)
        except ParseError:
            continue
        assert 0.0 <= probability <= 1.0


def test_parse_window_limit():
    raw = " " * 200 + "AI, 0.9"
    with pytest.raises(ParseError) as excinfo:
        parse_response(raw)
    assert excinfo.value.category == "missing_label"
    assert parse_response(raw, window=250) == (LabelValue.AI, 0.9)


# --- cache keys ------------------------------------------------------------------


def test_cache_key_stability_and_sensitivity():
    checksum = prompt_file_checksum()
    base = cache_key("p1", "expert+UC", PARAMS, checksum)
    assert base == cache_key("p1", "expert+UC", PARAMS, checksum)
    assert base != cache_key("p2", "expert+UC", PARAMS, checksum)
    assert base != cache_key("p1", "expert+U", PARAMS, checksum)
    hotter = ChatParams(model="gpt-3.5-turbo", temperature=0.5)
    assert base != cache_key("p1", "expert+UC", hotter, checksum)
    assert base != cache_key("p1", "expert+UC", PARAMS, "0" * 64)


def test_cache_roundtrip_and_corrupt_entry(tmp_path):
    cache = AnnotationCache(tmp_path)
    record = AnnotationRecord(
        publication_id="p1",
        prompt_id="expert+UC",
        params=PARAMS,
        raw_response="AI, 0.9",
        label=LabelValue.AI,
        probability=0.9,
        timestamp="t",
    )
    cache.put("k1", record)
    assert cache.get("k1") == record
    assert cache.get("missing") is None
    (tmp_path / "bad.json").write_text("{not json", encoding="utf-8")
    assert cache.get("bad") is None


# --- record invariants ------------------------------------------------------------


def test_record_exactly_one_outcome():
    with pytest.raises(Exception):
        AnnotationRecord(
            publication_id="p",
            prompt_id="i",
            params=PARAMS,
            raw_response="x",
            label=LabelValue.AI,
            probability=0.5,
            parse_error="both",
        )
    with pytest.raises(Exception):
        AnnotationRecord(
            publication_id="p", prompt_id="i", params=PARAMS, raw_response="x"
        )


# --- annotate_batch ----------------------------------------------------------------


def test_batch_cache_hits_short_circuit_backend(tmp_path):
    pubs = [make_pub(pub_id=f"p{i}") for i in range(100)]
    cache = AnnotationCache(tmp_path)

    warm = ScriptedMockBackend([ok() for _ in range(40)])
    first = annotate_batch(pubs[:40], SPEC, PARAMS, warm, cache=cache, concurrency=1)
    assert warm.calls == 40 and first.cache_hits == 0

    backend = ScriptedMockBackend([ok() for _ in range(60)])
    result = annotate_batch(pubs, SPEC, PARAMS, backend, cache=cache, concurrency=1)
    assert backend.calls == 60
    assert result.cache_hits == 40
    assert len(result.records) == 100
    assert [r.publication_id for r in result.records] == [p.id for p in pubs]


def test_batch_idempotent_with_warm_cache(tmp_path):
    pubs = [make_pub(pub_id=f"p{i}") for i in range(10)]
    cache = AnnotationCache(tmp_path)
    first = annotate_batch(
        pubs, SPEC, PARAMS, ScriptedMockBackend([ok() for _ in range(10)]), cache=cache
    )
    rerun_backend = ScriptedMockBackend([])
    second = annotate_batch(pubs, SPEC, PARAMS, rerun_backend, cache=cache)
    assert rerun_backend.calls == 0
    assert second.cache_hits == 10
    assert [r.to_dict() for r in second.records] == [r.to_dict() for r in first.records]


def test_batch_retries_server_errors_then_succeeds(tmp_path):
    backend = ScriptedMockBackend([ServerError(500), ServerError(500), ServerError(500), ok()])
    sleeps = []
    result = annotate_batch(
        [make_pub()],
        SPEC,
        PARAMS,
        backend,
        cache=AnnotationCache(tmp_path),
        sleep=sleeps.append,
    )
    assert backend.calls == 4
    assert result.retries == 3
    assert len(sleeps) == 3
    record = result.records[0]
    assert record.label is LabelValue.AI and record.parse_error is None


def test_batch_exhausted_retries_recorded_as_transport_error(tmp_path):
    backend = ScriptedMockBackend([RateLimitError("429")] * 10)
    result = annotate_batch(
        [make_pub()],
        SPEC,
        PARAMS,
        backend,
        cache=AnnotationCache(tmp_path),
        sleep=lambda _: None,
    )
    record = result.records[0]
    assert record.parse_error.startswith("transport_error:")
    assert result.counts()["transport_errors"] == 1


def test_batch_auth_failure_aborts(tmp_path):
    backend = ScriptedMockBackend([AuthenticationError("bad key")])
    with pytest.raises(AnnotationAborted):
        annotate_batch([make_pub()], SPEC, PARAMS, backend, cache=AnnotationCache(tmp_path))


def test_batch_malformed_response_recorded_not_retried(tmp_path):
    backend = ScriptedMockBackend([ok("gibberish with no verdict")])
    result = annotate_batch(
        [make_pub()], SPEC, PARAMS, backend, cache=AnnotationCache(tmp_path)
    )
    assert backend.calls == 1
    record = result.records[0]
    assert record.parse_error.startswith("missing_label")
    assert result.counts()["malformed"] == 1


def test_batch_reask_malformed_once(tmp_path):
    backend = ScriptedMockBackend([ok("???"), ok("Non-AI, 0.2")])
    result = annotate_batch(
        [make_pub()],
        SPEC,
        PARAMS,
        backend,
        cache=AnnotationCache(tmp_path),
        reask_malformed=True,
    )
    assert backend.calls == 2
    assert result.records[0].label is LabelValue.NON_AI


def test_batch_replay_deterministic(data_dir, tmp_path):
    from annobench.corpus import read_corpus

    pubs = read_corpus(data_dir / "replay" / "corpus.jsonl")
    backend = ReplayBackend(data_dir / "replay" / "responses.jsonl")
    params = ChatParams(model="gpt-3.5-turbo")
    first = annotate_batch(pubs, SPEC, params, backend, cache=AnnotationCache(tmp_path / "a"))
    second = annotate_batch(pubs, SPEC, params, backend, cache=AnnotationCache(tmp_path / "b"))
    assert [r.to_dict() for r in first.records] == [r.to_dict() for r in second.records]
    assert all(r.timestamp == "2023-06-15T00:00:00+00:00" for r in first.records)


def test_batch_concurrent_output_order_matches_input(tmp_path):
    pubs = [make_pub(pub_id=f"p{i}") for i in range(30)]
    backend = ScriptedMockBackend([ok(f"AI, 0.{50 + i}") for i in range(30)])
    result = annotate_batch(
        pubs, SPEC, PARAMS, backend, cache=AnnotationCache(tmp_path), concurrency=4
    )
    assert [r.publication_id for r in result.records] == [p.id for p in pubs]


def test_request_budget_throttles_with_fake_clock():
    from annobench.annotator import RequestBudget

    now = [0.0]
    waits = []

    def clock():
        return now[0]

    def sleep(seconds):
        waits.append(seconds)
        now[0] += seconds

    budget = RequestBudget(per_minute=2, clock=clock, sleep=sleep)
    budget.acquire()
    budget.acquire()
    assert waits == []
    budget.acquire()  # third call inside the same minute must wait
    assert waits and sum(waits) >= 60.0 - 1e-9


def test_manifest_counts(tmp_path):
    pubs = [make_pub(pub_id=f"p{i}") for i in range(3)]
    backend = ScriptedMockBackend([ok(), ok("???"), ok("Non-AI, 0.1")])
    result = annotate_batch(pubs, SPEC, PARAMS, backend, cache=AnnotationCache(tmp_path))
    manifest = build_run_manifest(result, SPEC, PARAMS, backend.name, "deadbeef")
    assert manifest["counts"]["total"] == 3
    assert manifest["counts"]["parsed"] == 2
    assert manifest["counts"]["malformed"] == 1
    assert manifest["prompt_checksum"] == prompt_file_checksum()
    assert manifest["params"]["temperature"] == 0.0
    assert manifest["tokens"]["input"] == 300


# --- cost estimation ----------------------------------------------------------------


def test_estimate_cost_empty_corpus_is_zero():
    assert estimate_cost([], SPEC, PARAMS) == 0.0


def test_estimate_cost_model_ratio_is_twenty():
    pubs = [make_pub(pub_id=f"p{i}", abstract="text " * (i + 1)) for i in range(25)]
    cheap = estimate_cost(pubs, SPEC, ChatParams(model="gpt-3.5-turbo"))
    pricey = estimate_cost(pubs, SPEC, ChatParams(model="gpt-4"))
    assert pricey / cheap == pytest.approx(20.0, abs=1e-9)


def test_estimate_cost_linear_in_corpus():
    pubs = [make_pub(pub_id=f"p{i}") for i in range(10)]
    once = estimate_cost(pubs, SPEC, PARAMS)
    doubled = estimate_cost(pubs + pubs, SPEC, PARAMS)
    assert doubled == pytest.approx(2 * once)


def test_estimate_cost_unknown_model():
    with pytest.raises(UnknownModelError) as excinfo:
        estimate_cost([make_pub()], SPEC, ChatParams(model="gpt-9000"))
    assert "gpt-4" in str(excinfo.value)


def test_cost_model_accounting():
    model = CostModel()
    assert model.cost("gpt-4", 10, 2) == pytest.approx(10 * 0.020 + 2 * 0.040)
    with pytest.raises(Exception):
        CostModel(rates={"m": (0.0, 1.0)})
