"""OpenAI-compatible chat-completion backend."""

from __future__ import annotations

import os

import httpx

from .types import CompletionRequest, CredentialMissing, ProviderRejection, TransientProviderError

DEFAULT_CREDENTIAL_ENV = "DISCLOSURE_LLM_API_KEY"
RETRYABLE_STATUS = frozenset({408, 409, 425, 429, 500, 502, 503, 504})


class OpenAICompatibleBackend:
    name = "live"

    def __init__(
        self,
        base_url: str = "https://api.openai.com/v1",
        credential_env: str = DEFAULT_CREDENTIAL_ENV,
        timeout: float = 120.0,
        transport: httpx.BaseTransport | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.credential_env = credential_env
        self.timeout = timeout
        self._transport = transport
        self._client: httpx.Client | None = None

    def ensure_ready(self) -> None:
        if not os.environ.get(self.credential_env, "").strip():
            raise CredentialMissing(f"credential missing: set ${self.credential_env}")

    def _http(self) -> httpx.Client:
        if self._client is None:
            self._client = httpx.Client(timeout=self.timeout, transport=self._transport)
        return self._client

    @staticmethod
    def payload(req: CompletionRequest) -> dict:
        messages = []
        if req.system_text:
            messages.append({"role": "system", "content": req.system_text})
        messages.append({"role": "user", "content": req.user_text})
        return {
            "model": req.model_id,
            "messages": messages,
            "temperature": req.temperature,
            "max_tokens": req.max_output_tokens,
        }

    def send(self, req: CompletionRequest) -> str:
        self.ensure_ready()
        key = os.environ[self.credential_env].strip()
        try:
            resp = self._http().post(
                f"{self.base_url}/chat/completions",
                json=self.payload(req),
                headers={"Authorization": f"Bearer {key}"},
            )
        except (httpx.TimeoutException, httpx.TransportError) as exc:
            raise TransientProviderError(f"transport error: {exc}") from exc
        if resp.status_code in RETRYABLE_STATUS:
            raise TransientProviderError(f"HTTP {resp.status_code}")
        if resp.status_code >= 400:
            raise ProviderRejection(f"HTTP {resp.status_code}: {resp.text[:300]}")
        try:
            return resp.json()["choices"][0]["message"]["content"] or ""
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProviderRejection(f"malformed provider response: {exc}") from exc
