"""Reproducible latency benchmark for the brute-force scan.

Generates a seeded random collection of unit vectors, builds an index
(one single-view asset per vector), and measures the scan stage of
repeated fused queries. BLAS is pinned to one thread so the reported
percentiles reflect single-threaded performance; passing `threads` > 1
exercises the index's chunked parallel scan instead.

Encoding latency is deliberately out of scope here: the interactive-use
budget is about re-scoring the collection, which is exactly what
`last_scan_micros` captures.
"""

from __future__ import annotations

import hashlib
import time

import numpy as np
from threadpoolctl import threadpool_limits

from .fusion import Embedding, FusedQuery, WeightedInput, fuse
from .index import DEFAULT_K, VIEW_FRONT, ViewRecord, build_index

BENCH_COLLECTION = "bench"


def generate_dataset(n: int, dim: int, seed: int) -> np.ndarray:
    """N x dim float32 matrix of unit rows, reproducible from the seed."""
    gen = np.random.Generator(np.random.PCG64(seed))
    matrix = gen.standard_normal((n, dim), dtype=np.float32)
    norms = np.sqrt(np.einsum("ij,ij->i", matrix, matrix, dtype=np.float64))
    matrix /= norms[:, None].astype(np.float32)
    return matrix


def dataset_checksum(matrix: np.ndarray) -> str:
    return hashlib.blake2b(matrix.tobytes(), digest_size=16).hexdigest()


def run_bench(
    n: int,
    dim: int,
    queries: int,
    seed: int,
    k: int = DEFAULT_K,
    threads: int = 1,
) -> dict:
    """Run the scan benchmark and return a machine-readable summary.

    Builds an index over `n` seeded random unit vectors and times the scan
    stage of `queries` random two-input fused queries. Returns percentiles
    in milliseconds plus the effective scan bandwidth at the median.
    """
    if n < 1 or dim < 1 or queries < 1:
        raise ValueError("n, dim, and queries must all be >= 1")
    t_total = time.perf_counter()
    matrix = generate_dataset(n, dim, seed)
    checksum = dataset_checksum(matrix)

    width = len(str(n - 1))
    records = [
        ViewRecord(
            asset_id=f"asset-{i:0{width}d}",
            view=VIEW_FRONT,
            collection_id=BENCH_COLLECTION,
            embedding=Embedding(matrix[i]),
            row_index=i,
        )
        for i in range(n)
    ]
    index = build_index(records, dim)

    gen = np.random.Generator(np.random.PCG64(seed + 1))
    scan_micros = np.empty(queries, dtype=np.float64)
    with threadpool_limits(limits=1, user_api="blas"):
        # One throwaway query so page faults and BLAS setup stay out of the
        # measured distribution.
        warm = _random_query(gen, dim)
        index.search(warm, k=k, collection_id=BENCH_COLLECTION, threads=threads)
        for qi in range(queries):
            query = _random_query(gen, dim)
            index.search(query, k=k, collection_id=BENCH_COLLECTION, threads=threads)
            scan_micros[qi] = index.stats().last_scan_micros

    p50, p95, p99 = (float(np.percentile(scan_micros, p)) for p in (50, 95, 99))
    scan_bytes = n * dim * 4
    return {
        "n": n,
        "dim": dim,
        "queries": queries,
        "k": k,
        "seed": seed,
        "threads": threads,
        "dataset_checksum": checksum,
        "p50_ms": p50 / 1000.0,
        "p95_ms": p95 / 1000.0,
        "p99_ms": p99 / 1000.0,
        "gb_per_s": scan_bytes / (p50 * 1e-6) / 1e9,
        "total_seconds": time.perf_counter() - t_total,
    }


def _random_query(gen: np.random.Generator, dim: int) -> FusedQuery:
    inputs = []
    for j in range(2):
        vec = gen.standard_normal(dim)
        vec /= np.linalg.norm(vec)
        weight = float(gen.uniform(0.25, 2.0))
        inputs.append(
            WeightedInput(
                embedding=Embedding(vec.astype(np.float32)),
                weight=weight,
                label=f"input-{j}",
            )
        )
    return fuse(inputs)
