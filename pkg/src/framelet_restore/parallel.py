"""Optional thread fan-out for embarrassingly parallel loops.

Worker count comes from the ``FRAMELET_THREADS`` environment variable and
defaults to 1 (fully serial).  All hot paths release the GIL inside numpy,
so threads are enough; results preserve input order either way.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

__all__ = ["worker_count", "ordered_map"]

_ENV_VAR = "FRAMELET_THREADS"


def worker_count() -> int:
    raw = os.environ.get(_ENV_VAR, "")
    if not raw.strip():
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{_ENV_VAR} must be an integer, got {raw!r}") from None
    return max(1, n)


def ordered_map(fn, items):
    """``list(map(fn, items))``, threaded when ``FRAMELET_THREADS`` > 1."""
    items = list(items)
    workers = worker_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))
