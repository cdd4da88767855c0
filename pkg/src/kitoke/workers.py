"""Worker-count control for the data-parallel stages.

The environment variable ``KITOKE_THREADS`` caps how many threads the tiled
kernels may use (default 1).  Results never depend on the worker count: every
stage computes independent partial results and reduces them in a fixed order.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

ENV_THREADS = "KITOKE_THREADS"


def worker_count() -> int:
    raw = os.environ.get(ENV_THREADS, "")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def map_ordered(fn: Callable, items: Sequence) -> list:
    """Apply ``fn`` to every item, in parallel when allowed.

    The returned list is always in input order, so downstream reductions see
    the same operand order no matter how many workers ran.
    """
    n = worker_count()
    if n <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(fn, items))
