"""Request parameters, annotation records, and the cost model."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..corpus.types import Label, LabelValue, Provenance


class AnnotatorError(ValueError):
    pass


@dataclass(frozen=True)
class ChatParams:
    """Chat-completion request parameters.

    Defaults pin the deterministic annotation setup: temperature 0, narrow
    nucleus, single non-streamed choice, no repetition penalties.
    """

    model: str
    temperature: float = 0.0
    top_p: float = 0.1
    n: int = 1
    stream: bool = False
    presence_penalty: float = 0.0
    frequency_penalty: float = 0.0

    def __post_init__(self) -> None:
        if not self.model:
            raise AnnotatorError("model must be non-empty")
        if self.temperature < 0:
            raise AnnotatorError("temperature must be >= 0")
        if self.n < 1:
            raise AnnotatorError("n must be >= 1")

    def canonical(self) -> dict:
        """Fixed-order dict used for cache keys and the wire body."""
        return {
            "model": self.model,
            "temperature": self.temperature,
            "top_p": self.top_p,
            "n": self.n,
            "stream": self.stream,
            "presence_penalty": self.presence_penalty,
            "frequency_penalty": self.frequency_penalty,
        }


@dataclass
class AnnotationRecord:
    """One chatbot call: inputs, raw output, parse result, and accounting.

    Exactly one of (label, probability) / parse_error is set. Transport
    failures that exhausted retries are recorded with a "transport_error:"
    parse_error prefix and an empty raw_response.
    """

    publication_id: str
    prompt_id: str
    params: ChatParams
    raw_response: str
    label: LabelValue | None = None
    probability: float | None = None
    parse_error: str | None = None
    input_tokens: int = 0
    output_tokens: int = 0
    cost_units: float = 0.0
    timestamp: str = ""

    def __post_init__(self) -> None:
        parsed = self.label is not None and self.probability is not None
        if parsed == (self.parse_error is not None):
            raise AnnotatorError("record must have exactly one of parsed result / parse_error")
        if self.probability is not None and not 0.0 <= self.probability <= 1.0:
            raise AnnotatorError(f"probability {self.probability} outside [0, 1]")

    @property
    def parsed_label(self) -> Label | None:
        if self.label is None:
            return None
        return Label(self.label, Provenance.CHATBOT, confidence=self.probability)

    def to_dict(self) -> dict:
        return {
            "publication_id": self.publication_id,
            "prompt_id": self.prompt_id,
            "params": self.params.canonical(),
            "raw_response": self.raw_response,
            "label": self.label.value if self.label else None,
            "probability": self.probability,
            "parse_error": self.parse_error,
            "input_tokens": self.input_tokens,
            "output_tokens": self.output_tokens,
            "cost_units": self.cost_units,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, record: dict) -> "AnnotationRecord":
        params = record["params"]
        return cls(
            publication_id=record["publication_id"],
            prompt_id=record["prompt_id"],
            params=ChatParams(**params),
            raw_response=record["raw_response"],
            label=LabelValue(record["label"]) if record.get("label") else None,
            probability=record.get("probability"),
            parse_error=record.get("parse_error"),
            input_tokens=record.get("input_tokens", 0),
            output_tokens=record.get("output_tokens", 0),
            cost_units=record.get("cost_units", 0.0),
            timestamp=record.get("timestamp", ""),
        )


class UnknownModelError(AnnotatorError):
    def __init__(self, model: str, known: list[str]) -> None:
        super().__init__(f"unknown model {model!r}; known models: {', '.join(known)}")
        self.model = model
        self.known = known


@dataclass(frozen=True)
class CostModel:
    """Abstract cost units per token, by model.

    The default table encodes the blended price gap between the two chat
    models (the larger one about 20x the cheaper), not real currency; live
    deployments should override with current rates.
    """

    rates: dict[str, tuple[float, float]] = field(
        default_factory=lambda: {
            "gpt-3.5-turbo": (0.001, 0.002),
            "gpt-4": (0.020, 0.040),
        }
    )

    def __post_init__(self) -> None:
        for model, (inp, out) in self.rates.items():
            if inp <= 0 or out <= 0:
                raise AnnotatorError(f"cost rates for {model!r} must be positive")

    def rate(self, model: str) -> tuple[float, float]:
        try:
            return self.rates[model]
        except KeyError:
            raise UnknownModelError(model, sorted(self.rates)) from None

    def cost(self, model: str, input_tokens: int, output_tokens: int) -> float:
        inp, out = self.rate(model)
        return input_tokens * inp + output_tokens * out


DEFAULT_COST_MODEL = CostModel()
