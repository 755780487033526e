from .cache import CacheEntry, FileCache
from .client import Backend, Gateway, GatewayStats, StructuredOutputError, StructuredResult
from .live import DEFAULT_CREDENTIAL_ENV, OpenAICompatibleBackend
from .mock import MockBackend, mock_backend
from .structured import Schema, SchemaError, extract_document
from .types import (
    FREE_TEXT,
    CompletionRequest,
    CompletionResult,
    CredentialMissing,
    GatewayError,
    ProviderRejection,
    RetriesExhausted,
    TransientProviderError,
    structured,
)

__all__ = [
    "Backend",
    "CacheEntry",
    "CompletionRequest",
    "CompletionResult",
    "CredentialMissing",
    "DEFAULT_CREDENTIAL_ENV",
    "FREE_TEXT",
    "FileCache",
    "Gateway",
    "GatewayError",
    "GatewayStats",
    "MockBackend",
    "OpenAICompatibleBackend",
    "ProviderRejection",
    "RetriesExhausted",
    "Schema",
    "SchemaError",
    "StructuredOutputError",
    "StructuredResult",
    "TransientProviderError",
    "extract_document",
    "mock_backend",
    "structured",
]
