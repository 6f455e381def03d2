"""Chat-completion endpoint client with retries and bounded concurrency.

The wire format is the standard chat-completions JSON shape: POST to
<base_url>/v1/chat/completions with {"model","messages","temperature",
"max_tokens","logprobs"}, content read from choices[0].message.content.
Transports are pluggable so tests and the pipeline's hermetic mode can run
against in-process mocks instead of HTTP.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import requests

DEFAULT_ENDPOINT_ENV = "POLILEGAL_ENDPOINT"
DEFAULT_API_KEY_ENV = "POLILEGAL_API_KEY"


class EndpointError(Exception):
    def __init__(self, status: Optional[int], message: str = ""):
        self.status = status
        super().__init__(f"endpoint error (status={status}) {message}".strip())


class TransientEndpointError(EndpointError):
    """Retryable failure: 5xx, 429, timeouts, connection resets."""


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: tuple[dict, ...]
    temperature: float = 0.0
    max_tokens: int = 1024
    logprobs_requested: bool = False

    def __post_init__(self):
        if not self.messages:
            raise ValueError("messages must be non-empty")
        if self.messages[-1].get("role") != "user":
            raise ValueError("last message must have role 'user'")
        for m in self.messages:
            if m.get("role") not in ("system", "user", "assistant"):
                raise ValueError(f"bad role {m.get('role')!r}")

    @classmethod
    def user(cls, prompt: str, model: str = "default", **kw) -> "ChatRequest":
        return cls(model=model, messages=({"role": "user", "content": prompt},), **kw)

    def payload(self) -> dict:
        return {
            "model": self.model,
            "messages": [dict(m) for m in self.messages],
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
            "logprobs": self.logprobs_requested,
        }


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str = ""
    api_key_env: str = DEFAULT_API_KEY_ENV
    max_in_flight: int = 4
    max_attempts: int = 3
    backoff_base_s: float = 0.5
    timeout_s: float = 60.0

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")


@dataclass(frozen=True)
class CompletionResult:
    content: str
    logprob: Optional[float] = None


# A transport maps a request payload dict to a chat-completions response dict.
Transport = Callable[[dict], dict]


def http_transport(cfg: EndpointConfig) -> Transport:
    session = requests.Session()

    def send(payload: dict) -> dict:
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(cfg.api_key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        try:
            resp = session.post(f"{cfg.base_url}/v1/chat/completions",
                                json=payload, headers=headers,
                                timeout=cfg.timeout_s)
        except requests.Timeout as exc:
            raise TransientEndpointError(None, "timeout") from exc
        except requests.ConnectionError as exc:
            raise TransientEndpointError(None, "connection error") from exc
        if resp.status_code >= 500 or resp.status_code == 429:
            raise TransientEndpointError(resp.status_code)
        if resp.status_code != 200:
            raise EndpointError(resp.status_code)
        return resp.json()

    return send


def _extract(response: dict) -> CompletionResult:
    try:
        choice = response["choices"][0]
        content = choice["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise EndpointError(None, "malformed response") from exc
    logprob = None
    lp = choice.get("logprobs")
    if isinstance(lp, dict) and "content" in lp:
        logprob = sum(t.get("logprob", 0.0) for t in lp["content"])
    elif isinstance(lp, (int, float)):
        logprob = float(lp)
    return CompletionResult(content=content, logprob=logprob)


def complete(req: ChatRequest, cfg: EndpointConfig,
             transport: Optional[Transport] = None,
             sleep: Callable[[float], None] = time.sleep) -> CompletionResult:
    """Single completion with exponential backoff on transient failures."""
    if transport is None:
        transport = http_transport(cfg)
    payload = req.payload()
    last: Optional[EndpointError] = None
    for attempt in range(cfg.max_attempts):
        try:
            return _extract(transport(payload))
        except TransientEndpointError as exc:
            last = exc
            if attempt + 1 < cfg.max_attempts:
                sleep(cfg.backoff_base_s * (2 ** attempt))
    assert last is not None
    raise last


@dataclass(frozen=True)
class BatchItem:
    index: int
    result: Optional[CompletionResult] = None
    error: Optional[Exception] = None

    @property
    def ok(self) -> bool:
        return self.error is None


def batch_complete(reqs: Sequence[ChatRequest], cfg: EndpointConfig,
                   transport: Optional[Transport] = None,
                   sleep: Callable[[float], None] = time.sleep) -> list[BatchItem]:
    """Run completions with at most max_in_flight concurrent calls.

    Results come back in request order; a failing request becomes an error
    item and never aborts the batch.
    """
    if not reqs:
        return []
    if transport is None:
        transport = http_transport(cfg)

    def run(i: int) -> BatchItem:
        try:
            return BatchItem(i, result=complete(reqs[i], cfg, transport, sleep))
        except Exception as exc:
            return BatchItem(i, error=exc)

    with ThreadPoolExecutor(max_workers=cfg.max_in_flight) as pool:
        items = list(pool.map(run, range(len(reqs))))
    return items


def make_response(content: str, logprob: Optional[float] = None) -> dict:
    """Build a minimal chat-completions response body (used by mocks)."""
    choice: dict = {"message": {"role": "assistant", "content": content}}
    if logprob is not None:
        choice["logprobs"] = logprob
    return {"choices": [choice]}
