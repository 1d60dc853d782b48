"""Deterministic fork-join helper.

Results always come back in input order, so output does not depend on the
thread count.
"""
import os
from concurrent.futures import ThreadPoolExecutor

ENV_THREADS = "GCE_METROLOGY_THREADS"


def resolve_threads(threads=None):
    if threads is None:
        threads = os.environ.get(ENV_THREADS, "1")
    try:
        threads = int(threads)
    except (TypeError, ValueError):
        threads = 1
    return max(1, threads)


def ordered_map(fn, items, threads=None):
    items = list(items)
    n = resolve_threads(threads)
    if n == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(fn, items))
