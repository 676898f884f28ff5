"""In-memory vector index: exact brute-force scan, per-asset dedup, top-k.

The index packs every collection into its own contiguous N x D float32
matrix with rows grouped by asset. A query is one BLAS matrix-vector
product, a grouped max to collapse multiple views of the same asset, and an
exact top-k selection with deterministic tie-breaking (score descending,
then asset_id ascending). No approximation anywhere: results equal a naive
scan by construction.

Indexes are immutable after build; any number of threads may search one
concurrently. Ingesting new data means building a new index and swapping it
in (the service layer owns the swap).
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    DuplicateRecordError,
    UnknownCollectionError,
)
from .fusion import Embedding, FusedQuery

VIEW_FRONT = "front"
VIEW_BACK = "back"
VIEW_PERSPECTIVE = "perspective"
DEFAULT_VIEWS = (VIEW_FRONT, VIEW_BACK, VIEW_PERSPECTIVE)

# Per the reference workflow: the top 5 unique assets are shown by default.
DEFAULT_K = 5


@dataclass(frozen=True)
class ViewRecord:
    """One embedding of one rendered view of one asset.

    `row_index` is the record's row position in its source vector file; the
    index keeps its own internal ordering and never mutates records.
    """

    asset_id: str
    view: str
    collection_id: str
    embedding: Embedding
    row_index: int = 0


@dataclass(frozen=True)
class ScoredMatch:
    """One retrieval result: an asset, its best view, and that view's score."""

    asset_id: str
    score: float
    best_view: str
    collection_id: str


@dataclass
class IndexStats:
    record_count: int
    asset_count: int
    dimension: int
    last_scan_micros: int = 0


class _CollectionBlock:
    """Packed scan data for one collection.

    Rows are sorted by (asset_id, view) so each asset's views are contiguous
    and asset order equals ascending asset_id, which makes the tie rule a
    plain index comparison. `group_starts[i]` is the first row of asset i;
    a sentinel row count is appended for slicing.
    """

    __slots__ = (
        "matrix",
        "asset_ids",
        "group_starts",
        "row_views",
        "single_view",
    )

    def __init__(self, records: list[ViewRecord], dimension: int) -> None:
        records = sorted(records, key=lambda r: (r.asset_id, r.view))
        n = len(records)
        matrix = np.empty((n, dimension), dtype=np.float32)
        asset_ids: list[str] = []
        group_starts: list[int] = []
        row_views: list[str] = []
        for i, rec in enumerate(records):
            matrix[i] = rec.embedding.values
            row_views.append(rec.view)
            if not asset_ids or rec.asset_id != asset_ids[-1]:
                asset_ids.append(rec.asset_id)
                group_starts.append(i)
        matrix.flags.writeable = False
        self.matrix = matrix
        self.asset_ids = asset_ids
        self.group_starts = np.asarray(group_starts + [n], dtype=np.intp)
        self.row_views = row_views
        self.single_view = len(asset_ids) == n

    @property
    def record_count(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def asset_count(self) -> int:
        return len(self.asset_ids)


class VectorIndex:
    """Immutable brute-force index over view records, partitioned by collection."""

    def __init__(self, blocks: dict[str, _CollectionBlock], dimension: int) -> None:
        self._blocks = blocks
        self._dimension = dimension
        self._stats = IndexStats(
            record_count=sum(b.record_count for b in blocks.values()),
            asset_count=sum(b.asset_count for b in blocks.values()),
            dimension=dimension,
        )

    @property
    def dimension(self) -> int:
        return self._dimension

    def collections(self) -> list[str]:
        return sorted(self._blocks)

    def collection_counts(self, collection_id: str) -> tuple[int, int]:
        """(record_count, asset_count) for one collection."""
        block = self._require(collection_id)
        return block.record_count, block.asset_count

    def stats(self) -> IndexStats:
        return replace(self._stats)

    def _require(self, collection_id: str) -> _CollectionBlock:
        try:
            return self._blocks[collection_id]
        except KeyError:
            raise UnknownCollectionError(
                f"unknown collection {collection_id!r}"
            ) from None

    def search(
        self,
        query: FusedQuery,
        k: int = DEFAULT_K,
        collection_id: str | None = None,
        threads: int = 1,
    ) -> list[ScoredMatch]:
        """Return the top-k unique assets of a collection by cosine score.

        Scores every record, keeps each asset's maximum-scoring view, sorts
        by score descending with ties broken by ascending asset_id, and
        truncates to k. Returns fewer than k matches when the collection
        holds fewer assets. `collection_id` may be omitted only when the
        index holds exactly one collection. `threads` > 1 splits the scan
        into row blocks; per-row results are identical either way.

        Raises:
            UnknownCollectionError: collection not in this index.
            DimensionMismatchError: query dimension differs from the index.
            ValueError: k < 1.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        if collection_id is None:
            if len(self._blocks) != 1:
                raise UnknownCollectionError(
                    "collection_id is required when the index holds "
                    f"{len(self._blocks)} collections"
                )
            collection_id = next(iter(self._blocks))
        block = self._require(collection_id)
        if query.dimension != self._dimension:
            raise DimensionMismatchError(
                f"query dimension {query.dimension} != index {self._dimension}"
            )

        start_ns = time.perf_counter_ns()
        scores = self._scan(block, query.code.values, threads)
        if block.single_view:
            asset_scores = scores
        else:
            asset_scores = np.maximum.reduceat(scores, block.group_starts[:-1])
        top = _select_top_k(asset_scores, k)
        matches = []
        for a in top:
            lo = block.group_starts[a]
            hi = block.group_starts[a + 1]
            best_row = lo + int(np.argmax(scores[lo:hi]))
            matches.append(
                ScoredMatch(
                    asset_id=block.asset_ids[a],
                    score=float(scores[best_row]),
                    best_view=block.row_views[best_row],
                    collection_id=collection_id,
                )
            )
        self._stats.last_scan_micros = (time.perf_counter_ns() - start_ns) // 1000
        return matches

    @staticmethod
    def _scan(block: _CollectionBlock, code: np.ndarray, threads: int) -> np.ndarray:
        matrix = block.matrix
        n = matrix.shape[0]
        if n == 0:
            return np.empty(0, dtype=np.float32)
        if threads <= 1 or n < 2 * threads:
            return matrix @ code
        out = np.empty(n, dtype=np.float32)
        step = -(-n // threads)
        # BLAS releases the GIL, so row blocks genuinely run in parallel.
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(np.dot, matrix[lo : lo + step], code, out[lo : lo + step])
                for lo in range(0, n, step)
            ]
            for f in futures:
                f.result()
        return out


def _select_top_k(asset_scores: np.ndarray, k: int) -> list[int]:
    """Indices of the k best scores, ordered by (-score, index).

    Equal scores are resolved by ascending index, including at the k-th
    boundary, so the selection is fully deterministic.
    """
    n = asset_scores.shape[0]
    if n == 0:
        return []
    kk = min(k, n)
    if kk == n:
        chosen = np.arange(n, dtype=np.intp)
    else:
        kth = np.partition(asset_scores, n - kk)[n - kk]
        above = np.flatnonzero(asset_scores > kth)
        fill = kk - above.shape[0]
        equal = np.flatnonzero(asset_scores == kth)[:fill]
        chosen = np.concatenate([above, equal])
    order = np.lexsort((chosen, -asset_scores[chosen]))
    return [int(i) for i in chosen[order]]


def build_index(
    records: Iterable[ViewRecord] | Sequence[ViewRecord], dimension: int
) -> VectorIndex:
    """Pack view records into an immutable searchable index.

    Raises:
        DimensionMismatchError: a record's embedding dimension differs from
            `dimension`.
        DuplicateRecordError: two records share (asset_id, view,
            collection_id).
    """
    if dimension < 1:
        raise ValueError("dimension must be >= 1")
    by_collection: dict[str, list[ViewRecord]] = {}
    seen: set[tuple[str, str, str]] = set()
    for rec in records:
        if rec.embedding.dimension != dimension:
            raise DimensionMismatchError(
                f"record ({rec.asset_id}, {rec.view}) has dimension "
                f"{rec.embedding.dimension}, expected {dimension}"
            )
        key = (rec.asset_id, rec.view, rec.collection_id)
        if key in seen:
            raise DuplicateRecordError(
                f"duplicate record (asset_id={rec.asset_id!r}, view={rec.view!r}, "
                f"collection_id={rec.collection_id!r})"
            )
        seen.add(key)
        by_collection.setdefault(rec.collection_id, []).append(rec)
    blocks = {
        cid: _CollectionBlock(recs, dimension) for cid, recs in by_collection.items()
    }
    return VectorIndex(blocks, dimension)
