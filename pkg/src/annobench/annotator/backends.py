"""Chat-completion backends: live HTTP, recorded replay, and scripted mock."""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol

from .models import ChatParams

log = logging.getLogger(__name__)

API_KEY_ENV = "ANNOBENCH_API_KEY"
DEFAULT_BASE_URL = "https://api.openai.com/v1"


class TransportError(RuntimeError):
    """A request failed in transit; `retryable` drives the retry loop."""

    retryable = True


class AuthenticationError(TransportError):
    """Credentials rejected or missing; aborts the whole run."""

    retryable = False


class RateLimitError(TransportError):
    retryable = True


class ServerError(TransportError):
    def __init__(self, status: int, detail: str = "") -> None:
        super().__init__(f"HTTP {status}{': ' + detail if detail else ''}")
        self.status = status


class NetworkError(TransportError):
    retryable = True


class ReplayMissError(TransportError):
    retryable = False


@dataclass(frozen=True)
class AnnotationRequest:
    """One unit of work handed to a backend."""

    publication_id: str
    prompt_id: str
    system_text: str
    user_text: str
    params: ChatParams


@dataclass(frozen=True)
class BackendResponse:
    content: str
    input_tokens: int = 0
    output_tokens: int = 0
    # Replay fixtures carry their recorded timestamp so reruns are
    # byte-identical; live leaves it None and the driver stamps wall clock.
    timestamp: str | None = None


class ChatBackend(Protocol):
    name: str

    def complete(self, request: AnnotationRequest) -> BackendResponse: ...


class LiveChatBackend:
    """POSTs to a chat-completions endpoint compatible with the OpenAI API.

    The API key comes from the ANNOBENCH_API_KEY environment variable unless
    passed explicitly; the base URL is configurable so any compatible
    endpoint works.
    """

    name = "live"

    def __init__(
        self,
        base_url: str = DEFAULT_BASE_URL,
        api_key: str | None = None,
        timeout: float = 60.0,
        session=None,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        self.timeout = timeout
        if session is None:
            import requests

            session = requests.Session()
        self.session = session

    def complete(self, request: AnnotationRequest) -> BackendResponse:
        if not self.api_key:
            raise AuthenticationError(
                f"no API key: set {API_KEY_ENV} or pass api_key explicitly"
            )
        body = dict(request.params.canonical())
        body["messages"] = [
            {"role": "system", "content": request.system_text},
            {"role": "user", "content": request.user_text},
        ]
        import requests

        try:
            response = self.session.post(
                f"{self.base_url}/chat/completions",
                json=body,
                headers={"Authorization": f"Bearer {self.api_key}"},
                timeout=self.timeout,
            )
        except (requests.ConnectionError, requests.Timeout) as exc:
            raise NetworkError(str(exc)) from exc

        if response.status_code in (401, 403):
            raise AuthenticationError(
                f"HTTP {response.status_code}: check {API_KEY_ENV} and endpoint permissions"
            )
        if response.status_code == 429:
            raise RateLimitError(f"HTTP 429: {response.text[:200]}")
        if response.status_code >= 500:
            raise ServerError(response.status_code, response.text[:200])
        if response.status_code >= 400:
            raise TransportError(f"HTTP {response.status_code}: {response.text[:200]}")

        data = response.json()
        try:
            content = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"unexpected response shape: {exc}") from exc
        usage = data.get("usage") or {}
        return BackendResponse(
            content=content,
            input_tokens=int(usage.get("prompt_tokens", 0)),
            output_tokens=int(usage.get("completion_tokens", 0)),
        )


class ReplayBackend:
    """Serves recorded responses keyed by (publication_id, prompt_id).

    The fixture is line-delimited JSON: publication_id, prompt_id, content,
    and optionally input_tokens / output_tokens / timestamp per row.
    """

    name = "replay"

    def __init__(self, fixture: str | Path | Iterable[dict]) -> None:
        if isinstance(fixture, (str, Path)):
            rows = []
            with open(fixture, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        rows.append(json.loads(line))
        else:
            rows = list(fixture)
        self.responses: dict[tuple[str, str], BackendResponse] = {}
        for row in rows:
            key = (row["publication_id"], row["prompt_id"])
            self.responses[key] = BackendResponse(
                content=row["content"],
                input_tokens=int(row.get("input_tokens", 0)),
                output_tokens=int(row.get("output_tokens", 0)),
                timestamp=row.get("timestamp"),
            )

    def complete(self, request: AnnotationRequest) -> BackendResponse:
        key = (request.publication_id, request.prompt_id)
        try:
            return self.responses[key]
        except KeyError:
            raise ReplayMissError(
                f"no recorded response for publication {key[0]!r} prompt {key[1]!r}"
            ) from None


class ScriptedMockBackend:
    """Plays a fixed sequence of responses/errors; used by tests and `mock:`.

    Each script step is either a BackendResponse (returned) or an Exception
    (raised). The call counter lets tests assert exactly how many requests
    reached the backend.
    """

    name = "mock"

    def __init__(self, script: Iterable[BackendResponse | Exception]) -> None:
        self.script = list(script)
        self.calls = 0

    def complete(self, request: AnnotationRequest) -> BackendResponse:
        if self.calls >= len(self.script):
            raise ReplayMissError(f"mock script exhausted after {len(self.script)} steps")
        step = self.script[self.calls]
        self.calls += 1
        if isinstance(step, Exception):
            raise step
        return step

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedMockBackend":
        """Load a script: one JSON per line, {"content": ...} or {"error": kind}."""
        steps: list[BackendResponse | Exception] = []
        errors = {
            "server": ServerError(500),
            "rate_limit": RateLimitError("scripted 429"),
            "network": NetworkError("scripted network failure"),
            "auth": AuthenticationError("scripted auth failure"),
        }
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                row = json.loads(line)
                if "error" in row:
                    steps.append(errors.get(row["error"], TransportError(row["error"])))
                else:
                    steps.append(
                        BackendResponse(
                            content=row["content"],
                            input_tokens=int(row.get("input_tokens", 0)),
                            output_tokens=int(row.get("output_tokens", 0)),
                            timestamp=row.get("timestamp", "1970-01-01T00:00:00Z"),
                        )
                    )
        return cls(steps)
