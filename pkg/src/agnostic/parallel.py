"""Order-preserving map over a thread pool capped by HARNESS_THREADS."""

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count():
    try:
        return max(1, int(os.environ.get("HARNESS_THREADS", "1")))
    except ValueError:
        return 1


def pmap(fn, items, workers=None):
    """``list(map(fn, items))``, possibly on threads; output order never changes."""
    items = list(items)
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))
