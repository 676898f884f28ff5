"""Gateway turning raw query inputs (text, image, sketch) into embeddings.

The real encoding model is an external service behind a one-endpoint JSON
protocol: POST {"modality": ..., "payload": <text or base64 blob>} and get
{"vector": [D reals]} back. The gateway normalizes every reply itself, so
nothing that is not unit length can reach the index regardless of what the
remote does.

Mock mode replaces the remote with a fully specified deterministic
construction so the whole pipeline runs and tests with no model: the
payload bytes are hashed with BLAKE2b (8-byte digest, a stable 64-bit
hash), that hash plus the configured seed feeds numpy's PCG64 bit
generator, D standard-normal draws are taken via
Generator.standard_normal, and the draw is normalized. Same payload and
seed always give the same embedding; distinct payloads collide only if the
64-bit hashes do.

Results are cached by (modality, payload hash) in a bounded LRU so that
re-running a query with different weights never re-encodes anything.
"""

from __future__ import annotations

import base64
import hashlib
import os
import threading
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
import requests

from .errors import (
    EncoderProtocolError,
    EncoderUnavailableError,
    InputTooLargeError,
    MeshSearchError,
    ZeroNormError,
)
from .fusion import (
    DEFAULT_DIMENSION,
    MODALITY_IMAGE,
    MODALITY_SKETCH,
    MODALITY_TEXT,
    Embedding,
    normalize,
)

RAW_MODALITIES = (MODALITY_TEXT, MODALITY_IMAGE, MODALITY_SKETCH)

MODE_MOCK = "mock"
MODE_REMOTE = "remote"

ENV_MODE = "MESHSEARCH_ENCODER_MODE"
ENV_ENDPOINT = "MESHSEARCH_ENCODER_ENDPOINT"

DEFAULT_MAX_PAYLOAD_BYTES = 8 << 20
DEFAULT_CACHE_SIZE = 4096
DEFAULT_TIMEOUT_MS = 5000

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RawInput:
    """One raw query input before encoding.

    `payload` is a UTF-8 string for text, or the raw bytes of an image or
    sketch (with `media_type` saying what the bytes are).
    """

    modality: str
    payload: str | bytes
    label: str = ""
    media_type: str = ""

    def __post_init__(self) -> None:
        if self.modality not in RAW_MODALITIES:
            raise ValueError(f"unknown raw modality {self.modality!r}")
        if self.modality == MODALITY_TEXT:
            if not isinstance(self.payload, str) or not self.payload:
                raise ValueError("text payload must be a non-empty string")
        else:
            if not isinstance(self.payload, (bytes, bytearray)) or not self.payload:
                raise ValueError(
                    f"{self.modality} payload must be non-empty bytes"
                )

    def payload_bytes(self) -> bytes:
        if isinstance(self.payload, str):
            return self.payload.encode("utf-8")
        return bytes(self.payload)


@dataclass
class EncoderConfig:
    mode: str = MODE_MOCK
    endpoint: str = ""
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    dimension: int = DEFAULT_DIMENSION
    mock_seed: int = 0
    max_payload_bytes: int = DEFAULT_MAX_PAYLOAD_BYTES
    cache_size: int = DEFAULT_CACHE_SIZE

    def __post_init__(self) -> None:
        if self.mode not in (MODE_MOCK, MODE_REMOTE):
            raise ValueError(f"unknown encoder mode {self.mode!r}")
        if self.mode == MODE_REMOTE and not self.endpoint:
            raise ValueError("remote encoder mode requires an endpoint")
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be > 0")
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")

    @classmethod
    def from_env(cls, **overrides: object) -> "EncoderConfig":
        """Build a config, letting environment variables override defaults.

        MESHSEARCH_ENCODER_MODE and MESHSEARCH_ENCODER_ENDPOINT take
        precedence over built-in defaults but not over explicit keyword
        arguments.
        """
        values: dict[str, object] = {}
        if ENV_MODE in os.environ:
            values["mode"] = os.environ[ENV_MODE]
        if ENV_ENDPOINT in os.environ:
            values["endpoint"] = os.environ[ENV_ENDPOINT]
        values.update(overrides)
        return cls(**values)  # type: ignore[arg-type]


def payload_hash(data: bytes | str) -> int:
    """Stable 64-bit hash of payload bytes (BLAKE2b, 8-byte digest)."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "big")


def mock_embedding(payload: bytes | str, seed: int, dimension: int) -> Embedding:
    """Deterministic pseudo-random unit embedding for a payload.

    PCG64 is seeded from (payload hash, seed); the vector is `dimension`
    float64 standard-normal draws, normalized. Platform-independent given
    the same numpy release.
    """
    entropy = [payload_hash(payload), seed & _MASK64]
    gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
    return normalize(gen.standard_normal(dimension))


class EncoderGateway:
    """Encodes raw inputs via the configured backend, with an LRU cache.

    Thread-safe: the cache is lock-protected and the backends are
    stateless. `encode_calls` counts actual backend encodes (cache misses);
    `cache_hits` counts lookups served from the cache.
    """

    def __init__(self, config: EncoderConfig | None = None) -> None:
        self.config = config or EncoderConfig.from_env()
        self._cache: OrderedDict[tuple[str, int], Embedding] = OrderedDict()
        self._lock = threading.Lock()
        self.encode_calls = 0
        self.cache_hits = 0

    @property
    def mode(self) -> str:
        return self.config.mode

    def encode(self, raw: RawInput) -> Embedding:
        """Encode one raw input into a unit embedding of the configured D.

        Raises:
            InputTooLargeError: blob payload exceeds the configured limit.
            EncoderUnavailableError: remote connect failure or timeout.
            EncoderProtocolError: malformed or wrong-dimension remote reply.
        """
        if raw.modality != MODALITY_TEXT:
            size = len(raw.payload)
            if size > self.config.max_payload_bytes:
                raise InputTooLargeError(
                    f"{raw.modality} payload of {size} bytes exceeds limit "
                    f"{self.config.max_payload_bytes}"
                )
        data = raw.payload_bytes()
        key = (raw.modality, payload_hash(data))
        with self._lock:
            cached = self._cache.get(key)
            if cached is not None:
                self._cache.move_to_end(key)
                self.cache_hits += 1
                return cached
        embedding = self._encode_uncached(raw, data)
        with self._lock:
            self.encode_calls += 1
            self._cache[key] = embedding
            self._cache.move_to_end(key)
            while len(self._cache) > self.config.cache_size:
                self._cache.popitem(last=False)
        return embedding

    def _encode_uncached(self, raw: RawInput, data: bytes) -> Embedding:
        if self.config.mode == MODE_MOCK:
            return mock_embedding(data, self.config.mock_seed, self.config.dimension)
        return self._encode_remote(raw)

    def _encode_remote(self, raw: RawInput) -> Embedding:
        if raw.modality == MODALITY_TEXT:
            payload_field = raw.payload
        else:
            payload_field = base64.b64encode(raw.payload_bytes()).decode("ascii")
        body = {"modality": raw.modality, "payload": payload_field}
        try:
            resp = requests.post(
                self.config.endpoint, json=body, timeout=self.config.timeout_ms / 1000
            )
        except (requests.ConnectionError, requests.Timeout) as exc:
            raise EncoderUnavailableError(
                f"encoder at {self.config.endpoint} unreachable: {exc}"
            ) from exc
        if resp.status_code != 200:
            raise EncoderProtocolError(
                f"encoder replied with HTTP {resp.status_code}"
            )
        try:
            vector = resp.json()["vector"]
        except (ValueError, KeyError, TypeError):
            raise EncoderProtocolError("encoder reply is not {'vector': [...]}")
        arr = np.asarray(vector, dtype=np.float64)
        if arr.ndim != 1 or arr.shape[0] != self.config.dimension:
            raise EncoderProtocolError(
                f"encoder returned {arr.shape} values, expected "
                f"({self.config.dimension},)"
            )
        if not np.all(np.isfinite(arr)):
            raise EncoderProtocolError("encoder returned non-finite values")
        try:
            return normalize(arr)
        except ZeroNormError as exc:
            raise EncoderProtocolError(f"encoder returned a zero vector: {exc}")

    def encode_batch(self, inputs: list[RawInput]) -> list[Embedding]:
        """Encode inputs in order; the first failure aborts with its index.

        The failing input's position is attached to the raised error as
        `input_index` and appended to its message.
        """
        out: list[Embedding] = []
        for i, raw in enumerate(inputs):
            try:
                out.append(self.encode(raw))
            except MeshSearchError as exc:
                exc.input_index = i  # type: ignore[attr-defined]
                exc.args = (f"{exc.args[0]} (batch input {i})",) if exc.args else (
                    f"batch input {i} failed",
                )
                raise
        return out

    def probe(self) -> bool:
        """True if the backend can produce embeddings right now.

        Mock mode always can. Remote mode performs one uncached encode of a
        canary string and reports whether it succeeded.
        """
        if self.config.mode == MODE_MOCK:
            return True
        try:
            self._encode_remote(RawInput(MODALITY_TEXT, "encoder-gateway-probe"))
            return True
        except MeshSearchError:
            return False

    def stats(self) -> dict[str, int]:
        with self._lock:
            return {
                "encode_calls": self.encode_calls,
                "cache_hits": self.cache_hits,
                "cache_entries": len(self._cache),
            }
