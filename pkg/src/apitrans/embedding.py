"""Embedding providers, cosine similarity, and the flat exact-search index.

Two providers ship by default: a remote HTTP provider configured from the
environment, and a deterministic mock (token-feature hashing into ``d``
buckets followed by L2 normalization) that every offline test runs on.
Search is an exact linear scan; no approximate structures.
"""

from __future__ import annotations

import hashlib
import logging
import os
import re
import time
from dataclasses import dataclass, field
from typing import Any, Iterable, Protocol, Sequence

import numpy as np

from .errors import ConfigurationError, TransportError, ValidationError, ZeroTextError

logger = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"[\w$]+")


@dataclass(frozen=True)
class Embedding:
    """A fixed-length real vector plus the id of the model that produced it."""

    values: tuple[float, ...]
    model_id: str

    def __post_init__(self) -> None:
        if len(self.values) == 0:
            raise ValidationError("embedding must be non-empty")
        arr = np.asarray(self.values, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise ValidationError("embedding entries must be finite")

    @property
    def dimension(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)

    def to_json_dict(self) -> dict[str, Any]:
        return {"values": list(self.values), "model_id": self.model_id}

    @classmethod
    def from_json_dict(cls, doc: dict[str, Any]) -> "Embedding":
        return cls(values=tuple(float(v) for v in doc["values"]), model_id=doc["model_id"])


class Embedder(Protocol):
    """Anything that can turn non-empty text into an Embedding."""

    model_id: str
    dimension: int

    def embed(self, text: str) -> Embedding: ...

    def embed_batch(self, texts: Sequence[str]) -> list[Embedding]: ...


def _require_text(text: str) -> str:
    trimmed = text.strip()
    if not trimmed:
        raise ZeroTextError("cannot embed empty text")
    return trimmed


class MockEmbedder:
    """Deterministic offline embedder.

    Hashes each token into one of ``dimension`` buckets (sha256, so stable
    across runs and platforms), accumulates counts, and L2-normalizes.
    Equal texts always produce equal vectors.
    """

    def __init__(self, dimension: int = 256):
        if dimension < 1:
            raise ValidationError("dimension must be >= 1")
        self.dimension = dimension
        self.model_id = f"mock-hash-{dimension}"

    def _bucket(self, token: str) -> int:
        digest = hashlib.sha256(token.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "big") % self.dimension

    def embed(self, text: str) -> Embedding:
        trimmed = _require_text(text)
        tokens = _TOKEN_RE.findall(trimmed)
        if not tokens:
            tokens = [trimmed]
        vec = np.zeros(self.dimension, dtype=np.float64)
        for token in tokens:
            vec[self._bucket(token)] += 1.0
        vec /= np.linalg.norm(vec)
        return Embedding(values=tuple(vec.tolist()), model_id=self.model_id)

    def embed_batch(self, texts: Sequence[str]) -> list[Embedding]:
        return [self.embed(t) for t in texts]


@dataclass
class RemoteProviderConfig:
    """One HTTP config shape shared by chat and embedding providers."""

    base_url: str
    model_id: str
    api_key_env: str = "APITRANS_API_KEY"
    timeout: float = 60.0
    max_retries: int = 3
    backoff_seconds: float = 1.0
    batch_size: int = 64
    max_in_flight: int = 4

    def api_key(self) -> str:
        key = os.environ.get(self.api_key_env, "")
        if not key:
            raise ConfigurationError(
                f"environment variable {self.api_key_env} is not set"
            )
        return key


class RemoteEmbedder:
    """OpenAI-style embeddings endpoint client with bounded retries."""

    def __init__(self, config: RemoteProviderConfig, session: Any | None = None, dimension: int | None = None):
        import requests

        self.config = config
        self.model_id = config.model_id
        self.dimension = dimension or 0  # discovered from the first response
        self._session = session or requests.Session()

    def embed(self, text: str) -> Embedding:
        return self.embed_batch([text])[0]

    def embed_batch(self, texts: Sequence[str]) -> list[Embedding]:
        out: list[Embedding] = []
        for start in range(0, len(texts), self.config.batch_size):
            batch = [_require_text(t) for t in texts[start : start + self.config.batch_size]]
            out.extend(self._request(batch))
        return out

    def _request(self, batch: list[str]) -> list[Embedding]:
        url = self.config.base_url.rstrip("/") + "/embeddings"
        payload = {"model": self.config.model_id, "input": batch}
        headers = {"Authorization": f"Bearer {self.config.api_key()}"}
        last_error: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            try:
                resp = self._session.post(
                    url, json=payload, headers=headers, timeout=self.config.timeout
                )
                if resp.status_code >= 500 or resp.status_code == 429:
                    raise TransportError(f"server returned {resp.status_code}")
                resp.raise_for_status()
                data = resp.json()["data"]
                embeddings = [
                    Embedding(values=tuple(item["embedding"]), model_id=self.model_id)
                    for item in sorted(data, key=lambda d: d.get("index", 0))
                ]
                if embeddings and not self.dimension:
                    self.dimension = embeddings[0].dimension
                return embeddings
            except Exception as exc:  # noqa: BLE001 - retry loop surfaces the last error
                last_error = exc
                if attempt < self.config.max_retries:
                    time.sleep(self.config.backoff_seconds * (2**attempt))
        raise TransportError(f"embedding request failed after retries: {last_error}")


def cosine(a: Embedding | Sequence[float], b: Embedding | Sequence[float]) -> float:
    """dot(a, b) / (|a| |b|); symmetric, in [-1, 1]."""
    va = a.as_array() if isinstance(a, Embedding) else np.asarray(a, dtype=np.float64)
    vb = b.as_array() if isinstance(b, Embedding) else np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape:
        raise ValidationError(f"dimension mismatch: {va.shape[0]} vs {vb.shape[0]}")
    norm_a = np.linalg.norm(va)
    norm_b = np.linalg.norm(vb)
    if norm_a == 0.0 or norm_b == 0.0:
        raise ValidationError("cosine is undefined for a zero vector")
    return float(np.dot(va, vb) / (norm_a * norm_b))


class VectorIndex:
    """Flat exact-search index over embedded records.

    Immutable once built: queries may run concurrently from any number of
    threads. Payloads are arbitrary records carrying the embedded object.
    """

    def __init__(self, dimension: int, language: Any = None):
        if dimension < 1:
            raise ValidationError("index dimension must be >= 1")
        self.dimension = dimension
        self.language = language
        self._ids: list[int] = []
        self._payloads: dict[int, Any] = {}
        self._rows: list[np.ndarray] = []
        self._matrix: np.ndarray | None = None
        self._norms: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self._ids)

    def add(self, record_id: int, embedding: Embedding, payload: Any = None) -> None:
        if embedding.dimension != self.dimension:
            raise ValidationError(
                f"embedding dimension {embedding.dimension} != index dimension {self.dimension}"
            )
        if record_id in self._payloads:
            raise ValidationError(f"duplicate record id {record_id}")
        row = embedding.as_array()
        norm = np.linalg.norm(row)
        if norm == 0.0:
            raise ValidationError(f"record {record_id} has a zero embedding")
        self._ids.append(record_id)
        self._payloads[record_id] = payload
        self._rows.append(row)
        self._matrix = None
        self._norms = None

    def payload(self, record_id: int) -> Any:
        return self._payloads[record_id]

    def ids(self) -> list[int]:
        return list(self._ids)

    def _ensure_matrix(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self._matrix is None:
            self._matrix = np.vstack(self._rows)
            self._norms = np.linalg.norm(self._matrix, axis=1)
        return self._matrix, self._norms, np.asarray(self._ids, dtype=np.int64)

    def query_topk(self, query: Embedding, k: int) -> list[tuple[int, float]]:
        """The min(k, len(index)) most similar records.

        Scores are non-increasing; exact ties break by ascending id.
        An empty index yields an empty list.
        """
        if k < 1:
            raise ValidationError("k must be >= 1")
        if len(self._ids) == 0:
            return []
        if query.dimension != self.dimension:
            raise ValidationError(
                f"query dimension {query.dimension} != index dimension {self.dimension}"
            )
        matrix, norms, ids = self._ensure_matrix()
        q = query.as_array()
        q_norm = np.linalg.norm(q)
        if q_norm == 0.0:
            raise ValidationError("cosine is undefined for a zero query vector")
        scores = matrix @ q / (norms * q_norm)
        order = np.lexsort((ids, -scores))
        top = order[: min(k, len(ids))]
        return [(int(ids[j]), float(scores[j])) for j in top]
