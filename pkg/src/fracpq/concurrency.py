"""Worker-pool plumbing for multistart and sweep runs.

Results are always merged by input index, so concurrent execution cannot
change any output.  FRACPQ_THREADS caps the pool; unset means one worker
per logical processor.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def worker_count() -> int:
    env = os.environ.get("FRACPQ_THREADS")
    if env is not None:
        try:
            count = int(env)
        except ValueError:
            count = 1
        return max(1, count)
    return os.cpu_count() or 1


def map_indexed(fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
    """Apply fn to every item, in a pool when it helps, ordered by index."""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
