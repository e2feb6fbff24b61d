"""Worker-pool helper with deterministic result order."""

import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "NEAR_MISSES_THREADS"


def resolve_threads(threads=None):
    """Thread count from the environment override, else ``threads``, else 1."""
    env = os.environ.get(THREADS_ENV)
    if env:
        threads = int(env)
    if threads is None:
        threads = 1
    if threads < 1:
        raise ValueError(f"thread count must be >= 1, got {threads}")
    return threads


def parallel_map(fn, items, threads=1):
    """Apply ``fn`` to ``items``; results are returned in input order.

    Work is submitted in the given order, so callers put the most expensive
    items first for load balance.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
