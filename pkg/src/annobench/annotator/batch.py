"""Batch annotation driver: cache, retries, bounded concurrency, manifests."""

from __future__ import annotations

import logging
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable, Sequence

from ..corpus.types import Publication
from ..promptkit import (
    DEFAULT_CHAR_BUDGET,
    PromptSpec,
    build_user_message,
    prompt_file_checksum,
    render_prompt,
)
from .backends import AnnotationRequest, AuthenticationError, ChatBackend, TransportError
from .cache import AnnotationCache, cache_key
from .models import AnnotationRecord, ChatParams, CostModel, DEFAULT_COST_MODEL
from .parsing import ParseError, parse_response

log = logging.getLogger(__name__)

# Rough token estimate used before a run: ~4 characters per token, plus a
# small fixed allowance for the short label+score reply.
CHARS_PER_TOKEN = 4
ESTIMATED_OUTPUT_TOKENS = 8

DEFAULT_CONCURRENCY = 4


class AnnotationAborted(RuntimeError):
    """The whole run stopped (auth failure); partial results stay cached."""


@dataclass(frozen=True)
class RetryPolicy:
    max_retries: int = 5
    base_delay: float = 0.5
    max_delay: float = 30.0

    def delay(self, attempt: int) -> float:
        return min(self.base_delay * (2**attempt), self.max_delay)


class RequestBudget:
    """Optional requests-per-minute throttle shared across worker threads."""

    def __init__(self, per_minute: int, clock: Callable[[], float] = time.monotonic, sleep=time.sleep) -> None:
        if per_minute < 1:
            raise ValueError("per_minute must be >= 1")
        self.per_minute = per_minute
        self.clock = clock
        self.sleep = sleep
        self._lock = threading.Lock()
        self._sent: list[float] = []

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self.clock()
                self._sent = [t for t in self._sent if now - t < 60.0]
                if len(self._sent) < self.per_minute:
                    self._sent.append(now)
                    return
                wait = 60.0 - (now - self._sent[0])
            self.sleep(max(wait, 0.01))


@dataclass
class BatchResult:
    records: list[AnnotationRecord] = field(default_factory=list)
    cache_hits: int = 0
    backend_calls: int = 0
    retries: int = 0

    def counts(self) -> dict:
        parsed = sum(1 for r in self.records if r.parse_error is None)
        transport = sum(
            1 for r in self.records if r.parse_error and r.parse_error.startswith("transport_error:")
        )
        malformed = len(self.records) - parsed - transport
        return {
            "total": len(self.records),
            "parsed": parsed,
            "malformed": malformed,
            "transport_errors": transport,
            "cache_hits": self.cache_hits,
            "backend_calls": self.backend_calls,
            "retries": self.retries,
        }


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


def annotate_batch(
    pubs: Sequence[Publication],
    spec: PromptSpec,
    params: ChatParams,
    backend: ChatBackend,
    cache: AnnotationCache | None = None,
    cost_model: CostModel = DEFAULT_COST_MODEL,
    concurrency: int = DEFAULT_CONCURRENCY,
    retry: RetryPolicy = RetryPolicy(),
    char_budget: int = DEFAULT_CHAR_BUDGET,
    reask_malformed: bool = False,
    rate_limiter: RequestBudget | None = None,
    sleep: Callable[[float], None] = time.sleep,
    clock: Callable[[], str] = _now_iso,
) -> BatchResult:
    """Annotate every publication once, in input order.

    Cache hits short-circuit the backend; fresh results are persisted as
    they arrive, so an interrupted run resumes from where it stopped.
    Retryable transport failures are retried with capped exponential
    backoff, then recorded as transport-error records; authentication
    failures abort the run.
    """
    rendered = render_prompt(spec)
    checksum = prompt_file_checksum()
    result = BatchResult()
    lock = threading.Lock()

    def call_backend(request: AnnotationRequest):
        attempt = 0
        while True:
            if rate_limiter is not None:
                rate_limiter.acquire()
            with lock:
                result.backend_calls += 1
            try:
                return backend.complete(request)
            except AuthenticationError as exc:
                raise AnnotationAborted(f"annotation aborted: {exc}") from exc
            except TransportError as exc:
                if not exc.retryable or attempt >= retry.max_retries:
                    return exc
                with lock:
                    result.retries += 1
                delay = retry.delay(attempt)
                log.warning(
                    "retrying %s after %s (attempt %d, sleeping %.2fs)",
                    request.publication_id,
                    exc,
                    attempt + 1,
                    delay,
                )
                sleep(delay)
                attempt += 1

    def finish(record: AnnotationRecord, key: str) -> AnnotationRecord:
        if cache is not None:
            cache.put(key, record)
        return record

    def annotate_one(pub: Publication) -> AnnotationRecord:
        key = cache_key(pub.id, spec.id, params, checksum)
        if cache is not None:
            cached = cache.get(key)
            if cached is not None:
                with lock:
                    result.cache_hits += 1
                return cached

        message = build_user_message(pub, char_budget=char_budget)
        request = AnnotationRequest(
            publication_id=pub.id,
            prompt_id=spec.id,
            system_text=rendered.system_text,
            user_text=message.text,
            params=params,
        )

        outcome = call_backend(request)
        if isinstance(outcome, TransportError):
            return finish(
                AnnotationRecord(
                    publication_id=pub.id,
                    prompt_id=spec.id,
                    params=params,
                    raw_response="",
                    parse_error=f"transport_error: {outcome}",
                    timestamp=clock(),
                ),
                key,
            )

        response = outcome
        label = probability = error = None
        try:
            label, probability = parse_response(response.content)
        except ParseError as exc:
            if reask_malformed:
                second = call_backend(request)
                if not isinstance(second, TransportError):
                    response = second
                    try:
                        label, probability = parse_response(response.content)
                        exc = None
                    except ParseError as again:
                        exc = again
            if exc is not None:
                error = f"{exc.category}: {exc.detail}"

        try:
            rate_cost = cost_model.cost(params.model, response.input_tokens, response.output_tokens)
        except Exception:
            rate_cost = 0.0

        return finish(
            AnnotationRecord(
                publication_id=pub.id,
                prompt_id=spec.id,
                params=params,
                raw_response=response.content,
                label=label,
                probability=probability,
                parse_error=error,
                input_tokens=response.input_tokens,
                output_tokens=response.output_tokens,
                cost_units=rate_cost,
                timestamp=response.timestamp or clock(),
            ),
            key,
        )

    if concurrency <= 1 or len(pubs) <= 1:
        result.records = [annotate_one(pub) for pub in pubs]
    else:
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            result.records = list(pool.map(annotate_one, pubs))
    return result


def estimate_cost(
    pubs: Sequence[Publication],
    spec: PromptSpec,
    params: ChatParams,
    cost_model: CostModel = DEFAULT_COST_MODEL,
    char_budget: int = DEFAULT_CHAR_BUDGET,
) -> float:
    """Pre-run cost estimate in abstract units.

    Token counts use the 4-chars-per-token heuristic, so this is a planning
    figure; live runs record true usage from the API response.
    """
    in_rate, out_rate = cost_model.rate(params.model)
    system_len = len(render_prompt(spec).system_text)
    total = 0.0
    for pub in pubs:
        message = build_user_message(pub, char_budget=char_budget)
        input_tokens = math.ceil((system_len + len(message.text)) / CHARS_PER_TOKEN)
        total += input_tokens * in_rate + ESTIMATED_OUTPUT_TOKENS * out_rate
    return total


def build_run_manifest(
    result: BatchResult,
    spec: PromptSpec,
    params: ChatParams,
    backend_name: str,
    corpus_digest: str,
    config: dict | None = None,
) -> dict:
    """Summary of one annotation run, written next to the records."""
    return {
        "prompt_id": spec.id,
        "prompt_checksum": prompt_file_checksum(),
        "model": params.model,
        "params": params.canonical(),
        "backend": backend_name,
        "corpus_hash": corpus_digest,
        "counts": result.counts(),
        "tokens": {
            "input": sum(r.input_tokens for r in result.records),
            "output": sum(r.output_tokens for r in result.records),
        },
        "total_cost_units": sum(r.cost_units for r in result.records),
        "config": config or {},
    }
