"""Batch parallelism capped by the PATHFORGE_THREADS environment variable."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def max_workers() -> int:
    raw = os.environ.get("PATHFORGE_THREADS", "1")
    try:
        workers = int(raw)
    except ValueError:
        raise ValueError(f"PATHFORGE_THREADS must be an integer, got {raw!r}")
    return max(1, workers)


def parallel_map(fn, items):
    """Map in deterministic input order, in processes when allowed.

    Work items are independent by construction (each carries its own seed),
    so results do not depend on the schedule.
    """
    items = list(items)
    workers = max_workers()
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
