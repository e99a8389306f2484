from pydantic import BaseModel


class BenchReport(BaseModel):
    """Measured per-query classify latency; warm-up queries are run but not reported"""
    store_size: int
    dim: int
    query_count: int
    warmup_queries: int
    workers: int
    seed: int
    p50_ms: float
    p95_ms: float
    max_ms: float
    mean_ms: float
    throughput_qps: float
