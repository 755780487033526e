from __future__ import annotations

import json
import logging
import threading
import time
from concurrent.futures import Future
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Protocol

from .cache import FileCache
from .structured import Schema, SchemaError, extract_document, feedback_suffix, output_instruction
from .types import (
    CompletionRequest,
    CompletionResult,
    GatewayError,
    ProviderRejection,
    RetriesExhausted,
    TransientProviderError,
    structured,
)

log = logging.getLogger(__name__)


class Backend(Protocol):
    name: str

    def ensure_ready(self) -> None: ...

    def send(self, req: CompletionRequest) -> str: ...


class StructuredOutputError(GatewayError):
    def __init__(self, schema_name: str, replies: list[str], errors: list[str], audit_file: Path | None):
        super().__init__(
            f"no valid '{schema_name}' document after {len(replies)} attempt(s): {errors[-1] if errors else ''}"
        )
        self.schema_name = schema_name
        self.replies = replies
        self.errors = errors
        self.audit_file = audit_file


@dataclass
class StructuredResult:
    document: Any
    raw_text: str
    attempt: int
    results: list[CompletionResult] = field(default_factory=list)

    @property
    def prompt_hash(self) -> str:
        return self.results[0].prompt_hash


@dataclass
class GatewayStats:
    live_calls: int = 0
    cache_hits: int = 0
    coalesced: int = 0
    failures: int = 0


class _RateLimiter:
    def __init__(self, min_interval: float, clock: Callable[[], float], sleep: Callable[[float], None]):
        self.min_interval = min_interval
        self._clock = clock
        self._sleep = sleep
        self._next = 0.0
        self._lock = threading.Lock()

    def wait(self) -> None:
        if self.min_interval <= 0:
            return
        with self._lock:
            now = self._clock()
            start = max(now, self._next)
            self._next = start + self.min_interval
        if start > now:
            self._sleep(start - now)


class Gateway:
    """Cached, retrying, rate-limited front for one completion backend.

    Safe to share across threads. Concurrent requests with the same cache key
    coalesce into a single backend call.
    """

    def __init__(
        self,
        backend: Backend,
        cache: FileCache | None = None,
        *,
        max_attempts: int = 4,
        backoff_base: float = 0.5,
        max_parallel: int = 4,
        requests_per_minute: float | None = None,
        structured_attempts: int = 3,
        audit_dir: str | Path | None = None,
        sleep: Callable[[float], None] = time.sleep,
        clock: Callable[[], float] = time.monotonic,
    ):
        if max_attempts < 1 or structured_attempts < 1:
            raise ValueError("attempt limits must be >= 1")
        self.backend = backend
        self.cache = cache
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.structured_attempts = structured_attempts
        self.audit_dir = Path(audit_dir) if audit_dir else None
        if self.audit_dir:
            self.audit_dir.mkdir(parents=True, exist_ok=True)
        self.stats = GatewayStats()
        self._sleep = sleep
        self._clock = clock
        self.max_parallel = max_parallel
        self._slots = threading.BoundedSemaphore(max_parallel)
        interval = 60.0 / requests_per_minute if requests_per_minute else 0.0
        self._limiter = _RateLimiter(interval, clock, sleep)
        self._inflight: dict[str, Future] = {}
        self._inflight_lock = threading.Lock()
        self._stats_lock = threading.Lock()
        self._audit_lock = threading.Lock()

    def _bump(self, name: str) -> None:
        with self._stats_lock:
            setattr(self.stats, name, getattr(self.stats, name) + 1)

    def _audit(self, **entry: Any) -> None:
        if not self.audit_dir:
            return
        line = json.dumps(entry, ensure_ascii=False, sort_keys=True)
        with self._audit_lock, (self.audit_dir / "exchanges.jsonl").open("a", encoding="utf-8") as fh:
            fh.write(line + "\n")

    def complete(self, req: CompletionRequest) -> CompletionResult:
        key = req.prompt_hash
        if self.cache is not None:
            hit = self.cache.get(key)
            if hit is not None:
                self._bump("cache_hits")
                return CompletionResult(hit, req.model_id, key, cached=True, latency_ms=0, attempt=1)

        with self._inflight_lock:
            fut = self._inflight.get(key)
            owner = fut is None
            if owner:
                fut = Future()
                self._inflight[key] = fut
        if not owner:
            self._bump("coalesced")
            return replace(fut.result(), cached=True, latency_ms=0)

        try:
            result = self._call(req, key)
        except BaseException as exc:
            fut.set_exception(exc)
            raise
        else:
            fut.set_result(result)
            return result
        finally:
            with self._inflight_lock:
                self._inflight.pop(key, None)

    def _call(self, req: CompletionRequest, key: str) -> CompletionResult:
        self.backend.ensure_ready()
        last_error: Exception | None = None
        with self._slots:
            for attempt in range(1, self.max_attempts + 1):
                self._limiter.wait()
                t0 = time.perf_counter()
                self._bump("live_calls")
                try:
                    text = self.backend.send(req)
                except TransientProviderError as exc:
                    last_error = exc
                    log.warning("attempt %d/%d for %s failed: %s", attempt, self.max_attempts, key[:12], exc)
                    self._audit(prompt_hash=key, model_id=req.model_id, attempt=attempt,
                                status="transient_error", error=str(exc))
                    if attempt < self.max_attempts:
                        self._sleep(self.backoff_base * 2 ** (attempt - 1))
                    continue
                except ProviderRejection as exc:
                    self._bump("failures")
                    self._audit(prompt_hash=key, model_id=req.model_id, attempt=attempt,
                                status="rejected", error=str(exc))
                    raise
                latency = int((time.perf_counter() - t0) * 1000)
                self._audit(prompt_hash=key, model_id=req.model_id, attempt=attempt, status="ok",
                            latency_ms=latency, system=req.system_text, user=req.user_text, reply=text)
                if self.cache is not None:
                    self.cache.put(key, text, req.model_id)
                return CompletionResult(text, req.model_id, key, cached=False,
                                        latency_ms=latency, attempt=attempt)
        self._bump("failures")
        raise RetriesExhausted(
            f"request {key[:12]} failed after {self.max_attempts} attempts: {last_error}",
            attempts=self.max_attempts,
        )

    def complete_structured(self, req: CompletionRequest, schema: Schema) -> StructuredResult:
        """Request a document matching ``schema``, re-asking with feedback on failure."""
        if req.schema_name is None:
            req = replace(req, response_contract=structured(schema.name))
        base_text = req.user_text + output_instruction(schema)
        replies: list[str] = []
        errors: list[str] = []
        results: list[CompletionResult] = []
        for attempt in range(1, self.structured_attempts + 1):
            user_text = base_text if not errors else base_text + feedback_suffix(errors[-1])
            result = self.complete(replace(req, user_text=user_text))
            results.append(result)
            replies.append(result.text)
            try:
                doc = schema.parse(extract_document(result.text))
            except SchemaError as exc:
                errors.append(str(exc))
                continue
            return StructuredResult(doc, result.text, attempt, results)

        audit_file = None
        if self.audit_dir:
            audit_file = self.audit_dir / f"structured_failure_{results[0].prompt_hash[:16]}.json"
            audit_file.write_text(
                json.dumps({"schema": schema.name, "replies": replies, "errors": errors},
                           ensure_ascii=False, indent=2),
                encoding="utf-8",
            )
        raise StructuredOutputError(schema.name, replies, errors, audit_file)
