"""Uniform chat-completion interface over three backends.

Backends: a remote HTTP chat API, a record/replay JSONL store, and a
scripted mock. All three return CompletionResult with token usage, so the
rest of the harness is backend-agnostic and fully testable offline.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import httpx


class Role(str, Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


class Backend(str, Enum):
    REMOTE = "remote"
    REPLAY = "replay"
    MOCK = "mock"


class GatewayError(RuntimeError):
    pass


class TransportError(GatewayError):
    """Network/HTTP failure that survived the bounded retries."""


class ReplayMiss(GatewayError):
    """No recorded response for this cache key in strict-replay mode."""

    def __init__(self, key: str):
        super().__init__(f"no recorded response for cache_key {key}")
        self.cache_key = key


class ScriptExhausted(GatewayError):
    """The mock backend ran out of scripted responses."""


@dataclass(frozen=True)
class Message:
    role: Role
    content: str

    def __post_init__(self):
        if self.role in (Role.SYSTEM, Role.USER) and not self.content:
            raise ValueError(f"{self.role.value} message content must be nonempty")


@dataclass(frozen=True)
class CompletionRequest:
    messages: tuple  # tuple of Message
    model_id: str = "default"
    max_tokens: int = 2048
    temperature: float = 0.0
    seed_tag: str = ""

    def __post_init__(self):
        if not self.messages:
            raise ValueError("messages must be nonempty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass(frozen=True)
class CompletionResult:
    text: str
    prompt_tokens: int
    completion_tokens: int
    backend: Backend
    cache_key: str
    estimated_usage: bool = False


def estimate_tokens(text: str) -> int:
    """Crude token estimate for backends that report no usage: ceil(chars/4)."""
    return math.ceil(len(text) / 4)


def cache_key(req: CompletionRequest) -> str:
    """Stable digest of a request.

    sha256 over the canonical JSON of
    {model_id, temperature, max_tokens, messages: [[role, content], ...], seed_tag}
    with sorted keys and compact separators; hex-encoded. Other tools can
    regenerate it from a trace snapshot.
    """
    payload = {
        "model_id": req.model_id,
        "temperature": req.temperature,
        "max_tokens": req.max_tokens,
        "messages": [[m.role.value, m.content] for m in req.messages],
        "seed_tag": req.seed_tag,
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def request_snapshot(req: CompletionRequest) -> dict:
    return {
        "model_id": req.model_id,
        "temperature": req.temperature,
        "max_tokens": req.max_tokens,
        "messages": [{"role": m.role.value, "content": m.content} for m in req.messages],
        "seed_tag": req.seed_tag,
    }


class Gateway:
    """Interface: complete(req) -> CompletionResult."""

    def complete(self, req: CompletionRequest) -> CompletionResult:
        raise NotImplementedError


class MockGateway(Gateway):
    """Returns scripted responses in call order. Thread-safe."""

    def __init__(self, script: Sequence[str]):
        self._script = list(script)
        self._calls: list[CompletionRequest] = []
        self._lock = threading.Lock()

    @property
    def calls(self) -> list:
        return list(self._calls)

    def complete(self, req: CompletionRequest) -> CompletionResult:
        key = cache_key(req)
        with self._lock:
            self._calls.append(req)
            if not self._script:
                raise ScriptExhausted(f"mock script exhausted at call {len(self._calls)}")
            text = self._script.pop(0)
        prompt_chars = sum(len(m.content) for m in req.messages)
        return CompletionResult(
            text=text,
            prompt_tokens=estimate_tokens("x" * prompt_chars),
            completion_tokens=estimate_tokens(text),
            backend=Backend.MOCK,
            cache_key=key,
            estimated_usage=True,
        )


class ReplayGateway(Gateway):
    """Record/replay store backed by an append-only JSONL file.

    In strict mode a miss raises ReplayMiss; otherwise the miss is delegated
    to `inner` and the response recorded. Reads are lock-free after load;
    writes are serialized.
    """

    def __init__(self, store_path: str, strict: bool = True, inner: Optional[Gateway] = None):
        self.store_path = store_path
        self.strict = strict
        self.inner = inner
        self._records: dict[str, dict] = {}
        self._write_lock = threading.Lock()
        if os.path.exists(store_path):
            with open(store_path, "r", encoding="utf-8") as f:
                for line in f:
                    line = line.strip()
                    if not line:
                        continue
                    rec = json.loads(line)
                    self._records[rec["cache_key"]] = rec

    def complete(self, req: CompletionRequest) -> CompletionResult:
        key = cache_key(req)
        rec = self._records.get(key)
        if rec is None:
            if self.strict or self.inner is None:
                raise ReplayMiss(key)
            result = self.inner.complete(req)
            rec = {
                "cache_key": key,
                "request_snapshot": request_snapshot(req),
                "response_text": result.text,
                "usage": {
                    "prompt_tokens": result.prompt_tokens,
                    "completion_tokens": result.completion_tokens,
                    "estimated": result.estimated_usage,
                },
                "timestamp": time.time(),
            }
            with self._write_lock:
                self._records[key] = rec
                with open(self.store_path, "a", encoding="utf-8") as f:
                    f.write(json.dumps(rec, ensure_ascii=False) + "\n")
        usage = rec.get("usage") or {}
        text = rec["response_text"]
        estimated = bool(usage.get("estimated", "prompt_tokens" not in usage))
        return CompletionResult(
            text=text,
            prompt_tokens=usage.get("prompt_tokens", estimate_tokens(str(req.messages))),
            completion_tokens=usage.get("completion_tokens", estimate_tokens(text)),
            backend=Backend.REPLAY,
            cache_key=key,
            estimated_usage=estimated,
        )


class RemoteGateway(Gateway):
    """Speaks the minimal chat-completion HTTP JSON protocol.

    Endpoint URL and API key come from the environment
    (MATHSTRAT_API_URL, MATHSTRAT_API_KEY) unless passed explicitly.
    Retries: 3 attempts with exponential backoff starting at 1 s, on
    transport-level failures only. Successful responses are cached by
    cache_key for the lifetime of the gateway, so one run never repeats a
    successful call for the same key.
    """

    RETRIES = 3
    BACKOFF_S = 1.0

    def __init__(self, endpoint: Optional[str] = None, api_key: Optional[str] = None,
                 timeout_s: float = 120.0):
        self.endpoint = endpoint or os.environ.get("MATHSTRAT_API_URL", "")
        self.api_key = api_key or os.environ.get("MATHSTRAT_API_KEY", "")
        if not self.endpoint:
            raise GatewayError("remote backend needs an endpoint URL (MATHSTRAT_API_URL)")
        self.timeout_s = timeout_s
        self._cache: dict[str, CompletionResult] = {}
        self._lock = threading.Lock()

    def complete(self, req: CompletionRequest) -> CompletionResult:
        key = cache_key(req)
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        body = {
            "model": req.model_id,
            "messages": [{"role": m.role.value, "content": m.content} for m in req.messages],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_err: Optional[Exception] = None
        for attempt in range(self.RETRIES):
            try:
                resp = httpx.post(self.endpoint, json=body, headers=headers,
                                  timeout=self.timeout_s)
                resp.raise_for_status()
                data = resp.json()
                break
            except (httpx.HTTPError, json.JSONDecodeError) as e:
                last_err = e
                if attempt < self.RETRIES - 1:
                    time.sleep(self.BACKOFF_S * (2 ** attempt))
        else:
            raise TransportError(f"remote call failed after {self.RETRIES} attempts: {last_err}")
        text = data["choices"][0]["message"]["content"]
        usage = data.get("usage") or {}
        result = CompletionResult(
            text=text,
            prompt_tokens=usage.get("prompt_tokens", estimate_tokens(str(body["messages"]))),
            completion_tokens=usage.get("completion_tokens", estimate_tokens(text)),
            backend=Backend.REMOTE,
            cache_key=key,
            estimated_usage="prompt_tokens" not in usage,
        )
        with self._lock:
            self._cache[key] = result
        return result
