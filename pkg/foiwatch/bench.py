"""Retrieval latency benchmark over classify_frame"""
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from loguru import logger
from tqdm import tqdm

from foiwatch.errors import ContractViolation, EmptyStoreError
from foiwatch.models.bench import BenchReport
from foiwatch.models.reference import ReferenceRecord
from foiwatch.store import ReferenceStore
from foiwatch.taxonomy import FINE_CLASSES
from foiwatch.vectorspace import STORAGE_DTYPE


def random_unit_vectors(n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    vectors = rng.standard_normal((n, dim))
    return (vectors / np.linalg.norm(vectors, axis=1, keepdims=True)).astype(STORAGE_DTYPE)


def build_random_store(size: int, dim: int, seed: int = 0, progress: bool = False) -> ReferenceStore:
    """Random unit rows labelled round-robin over the fine classes"""
    rng = np.random.default_rng(seed)
    store = ReferenceStore(dim=dim)
    rows = random_unit_vectors(size, dim, rng)
    for i in tqdm(range(size), desc='Building store', disable=not progress):
        label = FINE_CLASSES[i % len(FINE_CLASSES)]
        store.insert(ReferenceRecord(label=label, source_path=f'random/{i}', embedding=rows[i]))
    return store


def _timed_query(store: ReferenceStore, query: np.ndarray) -> float:
    start = time.perf_counter()
    store.classify_frame(query)
    return (time.perf_counter() - start) * 1000.0


def bench_store(store: ReferenceStore, n_queries: int = 10_000, seed: int = 0, warmup_fraction: float = 0.1,
                workers: int = 1, progress: bool = False) -> BenchReport:
    """
    Times classify_frame on random unit queries, each query individually.

    The first `warmup_fraction` of the queries warm caches and are excluded from the figures.

    Raises:
        EmptyStoreError: nothing to query
    """
    if len(store) == 0:
        raise EmptyStoreError("cannot benchmark an empty store")
    if n_queries < 1 or workers < 1 or not 0.0 <= warmup_fraction < 1.0:
        raise ContractViolation(
            f"invalid bench settings: n_queries={n_queries}, workers={workers}, warmup_fraction={warmup_fraction}")

    rng = np.random.default_rng(seed)
    queries = random_unit_vectors(n_queries, store.dim, rng)
    warmup = int(n_queries * warmup_fraction)
    for query in queries[:warmup]:
        store.classify_frame(query)

    measured = queries[warmup:]
    wall_start = time.perf_counter()
    if workers == 1:
        latencies = [_timed_query(store, q) for q in tqdm(measured, desc='Querying', disable=not progress)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            latencies = list(tqdm(pool.map(lambda q: _timed_query(store, q), measured), total=len(measured),
                                  desc='Querying', disable=not progress))
    wall = time.perf_counter() - wall_start

    samples = np.asarray(latencies)
    report = BenchReport(
        store_size=len(store),
        dim=store.dim,
        query_count=len(measured),
        warmup_queries=warmup,
        workers=workers,
        seed=seed,
        p50_ms=float(np.percentile(samples, 50)),
        p95_ms=float(np.percentile(samples, 95)),
        max_ms=float(samples.max()),
        mean_ms=float(samples.mean()),
        throughput_qps=len(measured) / wall if wall > 0 else float('inf'),
    )
    logger.info(f"Benchmarked {report.query_count} queries on {report.store_size} records: "
                f"p50 {report.p50_ms:.3f} ms, p95 {report.p95_ms:.3f} ms")
    return report
