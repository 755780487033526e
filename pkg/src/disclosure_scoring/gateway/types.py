from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass


class GatewayError(Exception):
    pass


class CredentialMissing(GatewayError):
    pass


class TransientProviderError(GatewayError):
    """Retryable failure: rate limit, 5xx, timeout, dropped connection."""


class ProviderRejection(GatewayError):
    """Non-retryable provider status (bad request, auth failure, ...)."""


class RetriesExhausted(GatewayError):
    def __init__(self, message: str, attempts: int):
        super().__init__(message)
        self.attempts = attempts


FREE_TEXT = "free_text"


def structured(schema_name: str) -> str:
    return f"structured:{schema_name}"


@dataclass(frozen=True)
class CompletionRequest:
    model_id: str
    user_text: str
    system_text: str = ""
    temperature: float = 0.0
    max_output_tokens: int = 4096
    response_contract: str = FREE_TEXT

    def __post_init__(self) -> None:
        if not self.user_text:
            raise ValueError("user_text must be nonempty")
        if not 0.0 <= self.temperature <= 1.0:
            raise ValueError("temperature must lie in [0, 1]")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be positive")

    @property
    def schema_name(self) -> str | None:
        if self.response_contract.startswith("structured:"):
            return self.response_contract.split(":", 1)[1]
        return None

    @property
    def prompt_hash(self) -> str:
        """SHA-256 over the request tuple; used as the cache key."""
        payload = json.dumps(
            [
                self.model_id,
                self.system_text,
                self.user_text,
                float(self.temperature),
                self.response_contract,
            ],
            ensure_ascii=False,
            separators=(",", ":"),
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CompletionResult:
    text: str
    model_id: str
    prompt_hash: str
    cached: bool
    latency_ms: int
    attempt: int
