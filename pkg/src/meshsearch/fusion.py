"""Embedding vector math: normalization, weighted fusion, cosine similarity.

Every embedding handled by this package is a unit-L2 float32 vector. A query
is built by scaling each input embedding by its user weight, summing, and
renormalizing the sum; because all stored vectors are unit length, ranking
reduces to a plain dot product.

Precision policy: embeddings are stored as float32; the scalar `similarity`
and `fuse` accumulate in float64 and round the result to float32. The batch
scan (`similarity_batch`) runs in float32 through the BLAS matrix-vector
kernel, which is what makes a 100K x 512 scan fit an interactive latency
budget; the two paths agree to well under 1e-6.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyQueryError,
    NormalizationError,
    ZeroNormError,
)

# Norm below this is treated as zero (exact cancellation, degenerate input).
EPSILON_NORM = 1e-12

# Tolerance for the unit-norm invariant on constructed embeddings.
UNIT_NORM_TOL = 1e-5

DEFAULT_DIMENSION = 512

MODALITY_TEXT = "text"
MODALITY_IMAGE = "image"
MODALITY_SKETCH = "sketch"
MODALITY_PRECOMPUTED = "precomputed"
INPUT_MODALITIES = (
    MODALITY_TEXT,
    MODALITY_IMAGE,
    MODALITY_SKETCH,
    MODALITY_PRECOMPUTED,
)


def _freeze(arr: np.ndarray) -> np.ndarray:
    try:
        arr.flags.writeable = False
    except ValueError:
        # View of a buffer we do not own; callers must treat it as read-only.
        pass
    return arr


@dataclass(frozen=True)
class Embedding:
    """A finite, unit-L2-normalized float32 vector.

    Construction validates the invariants; instances are immutable. Use
    `normalize` to build one from an arbitrary non-zero vector.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("embedding must be a non-empty 1-D vector")
        if arr.dtype != np.float32:
            arr = arr.astype(np.float32)
        arr = np.ascontiguousarray(arr)
        if not np.all(np.isfinite(arr)):
            raise ValueError("embedding values must be finite")
        norm = float(np.linalg.norm(arr.astype(np.float64)))
        if abs(norm - 1.0) > UNIT_NORM_TOL:
            raise NormalizationError(
                f"embedding norm {norm:.8f} is not unit within {UNIT_NORM_TOL}"
            )
        object.__setattr__(self, "values", _freeze(arr))

    @property
    def dimension(self) -> int:
        return int(self.values.shape[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Embedding):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    def __hash__(self) -> int:
        return hash(self.values.tobytes())


@dataclass(frozen=True)
class WeightedInput:
    """One query constituent: an embedding, a user weight, and a display label.

    Weights may be any finite real, including zero and negatives; they are
    not required to sum to one. A negative weight steers the fused query away
    from that input.
    """

    embedding: Embedding
    weight: float = 1.0
    modality: str = MODALITY_PRECOMPUTED
    label: str = ""

    def __post_init__(self) -> None:
        w = float(self.weight)
        if not np.isfinite(w):
            raise ValueError("weight must be finite")
        object.__setattr__(self, "weight", w)
        if self.modality not in INPUT_MODALITIES:
            raise ValueError(f"unknown modality {self.modality!r}")


@dataclass(frozen=True)
class FusedQuery:
    """The single normalized code produced by fusing weighted inputs."""

    code: Embedding
    provenance: tuple[tuple[str, float], ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "provenance", tuple(self.provenance))
        if not self.provenance:
            raise ValueError("fused query provenance must be non-empty")

    @property
    def dimension(self) -> int:
        return self.code.dimension


def normalize(v: Sequence[float] | np.ndarray) -> Embedding:
    """Scale a vector to unit L2 norm, preserving its direction.

    Accumulates in float64 and rounds the result to float32.

    Raises:
        ZeroNormError: if the L2 norm of `v` is at or below `EPSILON_NORM`.
        ValueError: if `v` is empty, not 1-D, or contains non-finite values.
    """
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("expected a non-empty 1-D vector")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector values must be finite")
    norm = float(np.linalg.norm(arr))
    if norm <= EPSILON_NORM:
        raise ZeroNormError(f"vector norm {norm:.3e} is at or below {EPSILON_NORM:.0e}")
    return Embedding((arr / norm).astype(np.float32))


def fuse(inputs: Iterable[WeightedInput]) -> FusedQuery:
    """Combine weighted inputs into one normalized query code.

    Computes the weighted sum of the input embeddings in float64, then
    renormalizes. The result is invariant to input order and to uniform
    positive scaling of all weights (up to float32 rounding).

    Raises:
        EmptyQueryError: no inputs given.
        DimensionMismatchError: inputs disagree on dimension.
        ZeroNormError: the weighted sum cancels to (near) zero.
    """
    items = list(inputs)
    if not items:
        raise EmptyQueryError("at least one weighted input is required")
    dim = items[0].embedding.dimension
    acc = np.zeros(dim, dtype=np.float64)
    for item in items:
        if item.embedding.dimension != dim:
            raise DimensionMismatchError(
                f"input dimension {item.embedding.dimension} != {dim}"
            )
        acc += item.weight * item.embedding.values.astype(np.float64)
    code = normalize(acc)
    provenance = tuple((item.label, item.weight) for item in items)
    return FusedQuery(code=code, provenance=provenance)


def similarity(query: FusedQuery, features: Embedding) -> float:
    """Cosine similarity between a fused query and one stored embedding.

    Both sides are unit vectors, so this is their dot product, accumulated
    in float64 and rounded to float32. Result lies in [-1, 1] up to
    rounding.

    Raises:
        DimensionMismatchError: dimensions differ.
    """
    if query.dimension != features.dimension:
        raise DimensionMismatchError(
            f"query dimension {query.dimension} != features {features.dimension}"
        )
    dot = np.dot(
        query.code.values.astype(np.float64), features.values.astype(np.float64)
    )
    return float(np.float32(dot))


def similarity_batch(query: FusedQuery, features: np.ndarray) -> np.ndarray:
    """Cosine similarity of a fused query against every row of a matrix.

    `features` must be an N x D matrix of unit-normalized rows; a C-contiguous
    float32 array is used as-is (the fast path), anything else is converted.
    Returns a float32 array of N scores computed by one BLAS matrix-vector
    product, matching the scalar `similarity` per row to well under 1e-6.

    Raises:
        DimensionMismatchError: matrix width differs from the query dimension.
    """
    mat = np.asarray(features)
    if mat.ndim != 2:
        raise ValueError("features must be a 2-D matrix")
    if mat.shape[1] != query.dimension:
        raise DimensionMismatchError(
            f"features dimension {mat.shape[1]} != query {query.dimension}"
        )
    if mat.dtype != np.float32:
        mat = mat.astype(np.float32)
    mat = np.ascontiguousarray(mat)
    if mat.shape[0] == 0:
        return np.empty(0, dtype=np.float32)
    return mat @ query.code.values
