"""Uniform chat-completion backends: live HTTP, on-disk replay cache, scripted mock.

Every backend exposes ``complete(request) -> CompletionResponse``. Transient
transport failures (connection errors, timeouts, 429/5xx) are retried with
exponential backoff; parse failures are never retried here — they belong to
the agents layer. All backends are safe to call from many threads at once.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Protocol, Sequence

import requests

from .errors import MockMiss, ProviderRefusal, Timeout, TransportError

API_KEY_ENV = "DCR_API_KEY"


@dataclass(frozen=True)
class GenerationSettings:
    """Generation knobs; temperature defaults to 0.0 for greedy decoding."""

    model_name: str = "gpt-3.5-turbo"
    temperature: float = 0.0
    max_output_tokens: int = 2048
    request_timeout_s: float = 60.0
    max_retries: int = 3
    retry_backoff_s: float = 1.0

    def __post_init__(self) -> None:
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.max_retries > 0 and self.retry_backoff_s <= 0:
            raise ValueError("retry_backoff_s must be > 0 when retries are enabled")


@dataclass(frozen=True)
class CompletionRequest:
    system_text: str | None
    user_text: str
    settings: GenerationSettings = field(default_factory=GenerationSettings)

    @property
    def cache_key(self) -> str:
        """Stable digest of the request content that determines the response."""
        payload = json.dumps(
            {
                "system_text": self.system_text,
                "user_text": self.user_text,
                "model_name": self.settings.model_name,
                "temperature": self.settings.temperature,
            },
            sort_keys=True,
            ensure_ascii=False,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CompletionResponse:
    text: str
    latency_s: float
    from_cache: bool = False
    attempt_count: int = 1


class Backend(Protocol):
    def complete(self, request: CompletionRequest) -> CompletionResponse: ...


class TransientFailure(Exception):
    """Internal marker for a retryable attempt failure."""


class TransientTimeout(TransientFailure):
    """Internal marker for a timed-out attempt."""


def _run_with_retries(
    attempt: Callable[[], str], settings: GenerationSettings
) -> tuple[str, int]:
    """Run ``attempt`` up to 1 + max_retries times; return (text, attempts)."""
    delay = settings.retry_backoff_s
    last: TransientFailure | None = None
    for i in range(settings.max_retries + 1):
        try:
            return attempt(), i + 1
        except TransientFailure as exc:
            last = exc
            if i < settings.max_retries:
                time.sleep(delay)
                delay *= 2
    if isinstance(last, TransientTimeout):
        raise Timeout(str(last)) from last
    raise TransportError(str(last)) from last


class MockBackend:
    """Deterministic scripted backend; resolves requests against a script.

    Script keys are matchers (exact ``user_text`` strings or substrings of
    it), tried in declaration order; the first match wins. Values are either
    one canned text, or a sequence consumed per matcher hit whose entries may
    be ``TransientFailure`` instances (to exercise retry paths); the last
    entry repeats once the sequence is exhausted.
    """

    def __init__(
        self,
        script: Mapping[str, str | Sequence[str | Exception]],
        latency_s: float = 0.0,
        max_in_flight: int | None = None,
    ):
        self._script = dict(script)
        self._latency_s = latency_s
        self._counts: dict[str, int] = {}
        self._lock = threading.Lock()
        self._gate = threading.Semaphore(max_in_flight) if max_in_flight else None
        self.calls: list[CompletionRequest] = []

    def _resolve(self, user_text: str) -> tuple[str, str | Sequence[str | Exception]] | None:
        for key, value in self._script.items():
            if key in user_text:
                return key, value
        return None

    def _attempt_once(self, request: CompletionRequest) -> str:
        with self._lock:
            self.calls.append(request)
            resolved = self._resolve(request.user_text)
            if resolved is None:
                raise MockMiss(
                    f"no scripted response matches request "
                    f"(user_text starts {request.user_text[:80]!r})"
                )
            matcher, entry = resolved
            if isinstance(entry, str):
                outcome: str | Exception = entry
            else:
                idx = self._counts.get(matcher, 0)
                self._counts[matcher] = idx + 1
                outcome = entry[min(idx, len(entry) - 1)]
        if self._latency_s:
            time.sleep(self._latency_s)
        if isinstance(outcome, Exception):
            raise outcome
        return outcome

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        started = time.perf_counter()
        if self._gate:
            self._gate.acquire()
        try:
            text, attempts = _run_with_retries(
                lambda: self._attempt_once(request), request.settings
            )
        finally:
            if self._gate:
                self._gate.release()
        return CompletionResponse(
            text=text,
            latency_s=time.perf_counter() - started,
            from_cache=False,
            attempt_count=attempts,
        )


def make_mock(
    script: Mapping[str, str | Sequence[str | Exception]],
    latency_s: float = 0.0,
    max_in_flight: int | None = None,
) -> MockBackend:
    """Build a scripted mock backend (first matching script entry wins)."""
    return MockBackend(script, latency_s=latency_s, max_in_flight=max_in_flight)


class HttpBackend:
    """OpenAI-compatible chat-completions client over HTTPS.

    ``base_url`` points at the API root (e.g. ``https://host/v1``); the key
    comes from the ``DCR_API_KEY`` environment variable unless given here.
    """

    _RETRYABLE_STATUS = {429, 500, 502, 503, 504}

    def __init__(
        self,
        base_url: str,
        api_key: str | None = None,
        max_in_flight: int | None = None,
        session: requests.Session | None = None,
    ):
        self._url = base_url.rstrip("/") + "/chat/completions"
        self._api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        self._session = session or requests.Session()
        self._gate = threading.Semaphore(max_in_flight) if max_in_flight else None

    def _attempt_once(self, request: CompletionRequest) -> str:
        settings = request.settings
        messages = []
        if request.system_text:
            messages.append({"role": "system", "content": request.system_text})
        messages.append({"role": "user", "content": request.user_text})
        payload = {
            "model": settings.model_name,
            "messages": messages,
            "temperature": settings.temperature,
            "max_tokens": settings.max_output_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        try:
            resp = self._session.post(
                self._url,
                json=payload,
                headers=headers,
                timeout=settings.request_timeout_s,
            )
        except requests.Timeout as exc:
            raise TransientTimeout(f"request timed out: {exc}") from exc
        except requests.RequestException as exc:
            raise TransientFailure(f"transport failure: {exc}") from exc
        if resp.status_code in self._RETRYABLE_STATUS:
            raise TransientFailure(f"retryable status {resp.status_code}: {resp.text[:200]}")
        if resp.status_code != 200:
            raise ProviderRefusal(f"status {resp.status_code}: {resp.text[:500]}")
        try:
            body = resp.json()
            text = body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProviderRefusal(f"malformed provider response: {exc}") from exc
        if not isinstance(text, str):
            raise ProviderRefusal("provider returned non-string content")
        return text

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        started = time.perf_counter()
        if self._gate:
            self._gate.acquire()
        try:
            text, attempts = _run_with_retries(
                lambda: self._attempt_once(request), request.settings
            )
        finally:
            if self._gate:
                self._gate.release()
        return CompletionResponse(
            text=text,
            latency_s=time.perf_counter() - started,
            from_cache=False,
            attempt_count=attempts,
        )


_KEY_RE = re.compile(r"^[0-9a-f]{64}$")


class CachingBackend:
    """Wraps a backend with an on-disk response cache keyed by request digest.

    One JSON file per key under ``cache_dir``; hits return the cached text
    byte-identical to the original response with ``attempt_count=0``. Writes
    are serialized and atomic, so concurrent workers can share one cache.
    """

    def __init__(self, inner: Backend, cache_dir: str | Path):
        self._inner = inner
        self._dir = Path(cache_dir)
        self._dir.mkdir(parents=True, exist_ok=True)
        self._write_lock = threading.Lock()
        self.hits = 0
        self.misses = 0
        self._stats_lock = threading.Lock()

    def _path(self, key: str) -> Path:
        if not _KEY_RE.match(key):
            raise ValueError(f"unexpected cache key {key!r}")
        return self._dir / f"{key}.json"

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        started = time.perf_counter()
        path = self._path(request.cache_key)
        if path.exists():
            with open(path, encoding="utf-8") as fh:
                entry = json.load(fh)
            with self._stats_lock:
                self.hits += 1
            return CompletionResponse(
                text=entry["response_text"],
                latency_s=time.perf_counter() - started,
                from_cache=True,
                attempt_count=0,
            )
        response = self._inner.complete(request)
        entry = {
            "request": {
                "system_text": request.system_text,
                "user_text": request.user_text,
                "model_name": request.settings.model_name,
                "temperature": request.settings.temperature,
            },
            "response_text": response.text,
            "created_unix": int(time.time()),
        }
        tmp = path.with_suffix(".tmp")
        with self._write_lock:
            with open(tmp, "w", encoding="utf-8") as fh:
                json.dump(entry, fh, ensure_ascii=False)
            os.replace(tmp, path)
        with self._stats_lock:
            self.misses += 1
        return response

    @property
    def hit_rate(self) -> float:
        total = self.hits + self.misses
        return self.hits / total if total else 0.0
