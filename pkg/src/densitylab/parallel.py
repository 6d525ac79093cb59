"""Thread-count knob shared by the compute modules.

Work is always split into the same chunks regardless of the thread count
and results are returned in submission order, so reductions performed by
the caller are bitwise reproducible for any number of workers.
"""

from __future__ import annotations

import os
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Iterator, TypeVar

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "DENSITYLAB_THREADS"


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: int | None = None) -> Iterator[R]:
    threads = default_threads() if threads is None else max(1, int(threads))
    if threads == 1:
        for item in items:
            yield fn(item)
        return
    # bounded look-ahead keeps streaming consumers memory-bounded
    window = 2 * threads
    with ThreadPoolExecutor(max_workers=threads) as pool:
        pending: deque = deque()
        for item in items:
            pending.append(pool.submit(fn, item))
            if len(pending) >= window:
                yield pending.popleft().result()
        while pending:
            yield pending.popleft().result()
