"""Chatbot annotation: backends, response parsing, caching, cost accounting."""

from .backends import (
    API_KEY_ENV,
    AnnotationRequest,
    AuthenticationError,
    BackendResponse,
    ChatBackend,
    LiveChatBackend,
    NetworkError,
    RateLimitError,
    ReplayBackend,
    ReplayMissError,
    ScriptedMockBackend,
    ServerError,
    TransportError,
)
from .batch import (
    AnnotationAborted,
    BatchResult,
    RequestBudget,
    RetryPolicy,
    annotate_batch,
    build_run_manifest,
    estimate_cost,
)
from .cache import AnnotationCache, cache_key
from .models import (
    AnnotationRecord,
    AnnotatorError,
    ChatParams,
    CostModel,
    DEFAULT_COST_MODEL,
    UnknownModelError,
)
from .parsing import (
    CONFLICTING_LABELS,
    MISSING_LABEL,
    MISSING_PROBABILITY,
    PARSE_WINDOW,
    PROBABILITY_OUT_OF_RANGE,
    ParseError,
    parse_response,
)

__all__ = [
    "API_KEY_ENV",
    "AnnotationAborted",
    "AnnotationCache",
    "AnnotationRecord",
    "AnnotationRequest",
    "AnnotatorError",
    "AuthenticationError",
    "BackendResponse",
    "BatchResult",
    "CONFLICTING_LABELS",
    "ChatBackend",
    "ChatParams",
    "CostModel",
    "DEFAULT_COST_MODEL",
    "LiveChatBackend",
    "MISSING_LABEL",
    "MISSING_PROBABILITY",
    "NetworkError",
    "PARSE_WINDOW",
    "PROBABILITY_OUT_OF_RANGE",
    "ParseError",
    "RateLimitError",
    "ReplayBackend",
    "ReplayMissError",
    "RequestBudget",
    "RetryPolicy",
    "ScriptedMockBackend",
    "ServerError",
    "TransportError",
    "UnknownModelError",
    "annotate_batch",
    "build_run_manifest",
    "cache_key",
    "estimate_cost",
    "parse_response",
]
