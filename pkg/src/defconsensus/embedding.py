"""Embedding providers and vector containers.

Three providers produce vectors for a corpus:

* ``local_deterministic`` — hashed bag-of-words (FNV-1a 64-bit, modulo
  bucketing, L2-normalized).  Fully deterministic and offline; NOT
  semantically meaningful.  Reproducing published similarity numbers
  requires real sentence-transformer vectors via the ``file`` or
  ``remote`` provider (reference model: all-mpnet-base-v2).
* ``file`` — precomputed vectors loaded from a JSON file.
* ``remote`` — POST {endpoint}/embed, batched, with exponential-backoff
  retries and bounded parallelism.

Results are cached per provider keyed by (model_id, definition id,
content hash of the text), so edited fixture texts invalidate stale
vectors.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import requests

from .corpus import Corpus
from .errors import (
    DimensionMismatch,
    EmptyCorpus,
    MalformedFile,
    MissingVector,
    ProviderUnavailable,
    ZeroVector,
)

LOCAL_MODEL_ID = "hashed-bow-fnv1a-64"
DEFAULT_LOCAL_DIM = 256

NORM_RTOL = 1e-9

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_TOKEN = re.compile(r"[0-9a-z]+")


@dataclass(frozen=True)
class EmbeddingVector:
    """Fixed-dimension finite real vector with its Euclidean norm cached."""

    values: tuple[float, ...]
    model_id: str
    norm: float = field(default=0.0)

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", values)
        if not values:
            raise ValueError("embedding must have dim >= 1")
        if not all(math.isfinite(v) for v in values):
            raise ValueError("embedding contains non-finite components")
        norm = math.sqrt(math.fsum(v * v for v in values))
        if norm == 0.0:
            raise ZeroVector(f"all-zero embedding from model {self.model_id!r}")
        if self.norm:
            if abs(norm - self.norm) > NORM_RTOL * self.norm:
                raise ValueError(
                    f"cached norm {self.norm} disagrees with computed norm {norm}"
                )
        else:
            object.__setattr__(self, "norm", norm)

    @property
    def dim(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class EmbeddingSet:
    """Vectors for a set of definition ids; uniform dim and model."""

    model_id: str
    dim: int
    vectors: dict[str, EmbeddingVector]

    def __post_init__(self):
        for did, vec in self.vectors.items():
            if vec.dim != self.dim:
                raise DimensionMismatch(
                    f"vector for {did!r} has dim {vec.dim}, set declares {self.dim}"
                )
            if vec.model_id != self.model_id:
                raise ValueError(
                    f"vector for {did!r} is from model {vec.model_id!r}, "
                    f"set declares {self.model_id!r}"
                )

    def __len__(self) -> int:
        return len(self.vectors)

    def __contains__(self, definition_id: str) -> bool:
        return definition_id in self.vectors

    def get(self, definition_id: str) -> EmbeddingVector:
        try:
            return self.vectors[definition_id]
        except KeyError:
            raise MissingVector(definition_id) from None


@dataclass(frozen=True)
class ProviderConfig:
    kind: str  # local_deterministic | file | remote
    model_id: str = LOCAL_MODEL_ID
    dim: int = DEFAULT_LOCAL_DIM
    endpoint: str = ""
    path: str = ""
    batch_size: int = 32
    max_retries: int = 3
    timeout: float = 30.0
    max_parallel_batches: int = 4

    def __post_init__(self):
        if self.kind not in ("local_deterministic", "file", "remote"):
            raise ValueError(f"unknown provider kind {self.kind!r}")
        if self.kind == "remote" and not self.endpoint:
            raise ValueError("remote provider requires an endpoint")
        if self.kind == "file" and not self.path:
            raise ValueError("file provider requires a path")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


def fnv1a_64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def local_deterministic_embed(text: str, dim: int = DEFAULT_LOCAL_DIM) -> EmbeddingVector:
    """Hashed bag-of-words: lowercase, tokens = maximal ASCII alphanumeric
    runs, FNV-1a 64-bit bucket counts, L2-normalized.  Unit norm by
    construction; raises ZeroVector when the text has no tokens."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    tokens = _TOKEN.findall(text.lower())
    if not tokens:
        raise ZeroVector("text contains no alphanumeric tokens")
    counts = [0] * dim
    for token in tokens:
        counts[fnv1a_64(token.encode("ascii")) % dim] += 1
    norm = math.sqrt(math.fsum(c * c for c in counts))
    return EmbeddingVector(
        values=tuple(c / norm for c in counts), model_id=LOCAL_MODEL_ID
    )


def text_content_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class _Cache:
    """In-process vector cache keyed by (model_id, definition id, text hash)."""

    def __init__(self):
        self._store: dict[tuple[str, str, str], EmbeddingVector] = {}

    def get(self, model_id: str, definition_id: str, text: str):
        return self._store.get((model_id, definition_id, text_content_hash(text)))

    def put(self, model_id: str, definition_id: str, text: str, vec: EmbeddingVector):
        self._store[(model_id, definition_id, text_content_hash(text))] = vec


_cache = _Cache()


def _embed_local(corpus: Corpus, config: ProviderConfig) -> EmbeddingSet:
    vectors = {}
    for d in corpus:
        cached = _cache.get(LOCAL_MODEL_ID, d.id, d.text)
        if cached is None or cached.dim != config.dim:
            cached = local_deterministic_embed(d.text, config.dim)
            if cached.dim == config.dim:
                _cache.put(LOCAL_MODEL_ID, d.id, d.text, cached)
        vectors[d.id] = cached
    return EmbeddingSet(model_id=LOCAL_MODEL_ID, dim=config.dim, vectors=vectors)


def _embed_from_file(corpus: Corpus, config: ProviderConfig) -> EmbeddingSet:
    with open(config.path, "rb") as fh:
        stored = load_embeddings(fh)
    vectors = {}
    for d in corpus:
        vectors[d.id] = stored.get(d.id)
    return EmbeddingSet(model_id=stored.model_id, dim=stored.dim, vectors=vectors)


def _post_batch(config: ProviderConfig, texts: list[str]) -> list[list[float]]:
    url = config.endpoint.rstrip("/") + "/embed"
    headers = {}
    token = os.environ.get("EMBED_API_TOKEN")
    if token:
        headers["Authorization"] = f"Bearer {token}"
    payload = {"model_id": config.model_id, "texts": texts}
    last_error: Exception | None = None
    for attempt in range(config.max_retries + 1):
        if attempt:
            time.sleep(min(2 ** (attempt - 1) * 0.1, 5.0))
        try:
            resp = requests.post(
                url, json=payload, headers=headers, timeout=config.timeout
            )
        except requests.RequestException as e:
            last_error = e
            continue
        if resp.status_code // 100 != 2:
            last_error = ProviderUnavailable(
                f"{url} returned HTTP {resp.status_code}"
            )
            continue
        try:
            body = resp.json()
            embeddings = body["embeddings"]
            dim = int(body["dim"])
        except (ValueError, KeyError, TypeError) as e:
            raise ProviderUnavailable(f"malformed response from {url}: {e}") from e
        if len(embeddings) != len(texts):
            raise ProviderUnavailable(
                f"{url} returned {len(embeddings)} embeddings for {len(texts)} texts"
            )
        for emb in embeddings:
            if len(emb) != dim:
                raise DimensionMismatch(
                    f"{url} declared dim {dim} but returned a {len(emb)}-length vector"
                )
        return embeddings
    raise ProviderUnavailable(
        f"embedding service unreachable after {config.max_retries + 1} attempts: {last_error}"
    )


def _embed_remote(corpus: Corpus, config: ProviderConfig) -> EmbeddingSet:
    to_fetch = []
    vectors: dict[str, EmbeddingVector] = {}
    for d in corpus:
        cached = _cache.get(config.model_id, d.id, d.text)
        if cached is not None:
            vectors[d.id] = cached
        else:
            to_fetch.append(d)

    batches = [
        to_fetch[i : i + config.batch_size]
        for i in range(0, len(to_fetch), config.batch_size)
    ]
    if batches:
        with ThreadPoolExecutor(max_workers=config.max_parallel_batches) as pool:
            results = list(
                pool.map(lambda b: _post_batch(config, [d.text for d in b]), batches)
            )
        for batch, embeddings in zip(batches, results):
            for d, emb in zip(batch, embeddings):
                vec = EmbeddingVector(values=tuple(emb), model_id=config.model_id)
                _cache.put(config.model_id, d.id, d.text, vec)
                vectors[d.id] = vec

    dims = {v.dim for v in vectors.values()}
    if len(dims) > 1:
        raise DimensionMismatch(f"provider returned mixed dims: {sorted(dims)}")
    return EmbeddingSet(
        model_id=config.model_id, dim=next(iter(dims)), vectors=vectors
    )


def embed_corpus(corpus: Corpus, config: ProviderConfig) -> EmbeddingSet:
    """One vector per definition; deterministic for local and file providers."""
    if len(corpus) == 0:
        raise EmptyCorpus("cannot embed an empty corpus")
    if config.kind == "local_deterministic":
        return _embed_local(corpus, config)
    if config.kind == "file":
        return _embed_from_file(corpus, config)
    return _embed_remote(corpus, config)


def save_embeddings(embedding_set: EmbeddingSet, path) -> None:
    """Single JSON object with full round-trip float precision."""
    payload = {
        "model_id": embedding_set.model_id,
        "dim": embedding_set.dim,
        "vectors": {
            did: list(vec.values) for did, vec in embedding_set.vectors.items()
        },
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, ensure_ascii=False)
        fh.write("\n")


def load_embeddings(stream) -> EmbeddingSet:
    raw = stream.read()
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8")
    try:
        payload = json.loads(raw)
        model_id = str(payload["model_id"])
        dim = int(payload["dim"])
        raw_vectors = payload["vectors"]
    except (ValueError, KeyError, TypeError) as e:
        raise MalformedFile(f"bad embedding file: {e}") from e
    if not isinstance(raw_vectors, dict):
        raise MalformedFile("'vectors' must be an object")
    vectors = {}
    for did, values in raw_vectors.items():
        if len(values) != dim:
            raise DimensionMismatch(
                f"vector for {did!r} has length {len(values)}, file declares dim {dim}"
            )
        vectors[did] = EmbeddingVector(values=tuple(values), model_id=model_id)
    return EmbeddingSet(model_id=model_id, dim=dim, vectors=vectors)


def load_embeddings_file(path) -> EmbeddingSet:
    with open(path, "rb") as fh:
        return load_embeddings(fh)
