import os
from concurrent.futures import ThreadPoolExecutor

from ._jit import thread_cap


def worker_count(threads=None):
    if threads is not None:
        return max(1, int(threads))
    return thread_cap(default=min(os.cpu_count() or 1, 8))


def parallel_map(fn, items, threads=None):
    """Ordered map over ``items``; threads only when more than one worker."""
    items = list(items)
    n = worker_count(threads)
    if n <= 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def chunks(n_items, threads=None):
    """Contiguous index slices splitting ``n_items`` across workers."""
    n = min(worker_count(threads), max(n_items, 1))
    bounds = [round(i * n_items / n) for i in range(n + 1)]
    return [slice(bounds[i], bounds[i + 1]) for i in range(n) if bounds[i + 1] > bounds[i]]
