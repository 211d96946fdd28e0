"""Small shared helpers."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def worker_count() -> int:
    """Worker threads allowed by the DSE_THREADS environment variable
    (0 or unset = one worker per CPU)."""
    raw = os.environ.get("DSE_THREADS", "0").strip()
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        return os.cpu_count() or 1
    return n


def thread_map(fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
    """Map preserving order; runs on a thread pool when DSE_THREADS allows.

    Results are identical to the sequential map as long as ``fn`` has no
    shared mutable state, so thread count never changes outputs.
    """
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
