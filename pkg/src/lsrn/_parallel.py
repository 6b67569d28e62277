"""Worker-pool plumbing shared by the operator kernels and the sketch."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

_workers = os.cpu_count() or 1


def get_workers() -> int:
    return _workers


def set_workers(n: int | None) -> None:
    """Set the worker count used by blocked kernels (None: hardware parallelism)."""
    global _workers
    if n is None:
        n = os.cpu_count() or 1
    if n < 1:
        raise ValueError(f"worker count must be >= 1, got {n}")
    _workers = int(n)


def pmap(fn: Callable[[T], R], items: Iterable[T], workers: int | None = None) -> list[R]:
    """Ordered map over ``items``; numpy kernels release the GIL so threads suffice."""
    items = list(items)
    w = get_workers() if workers is None else workers
    if w <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=min(w, len(items))) as ex:
        return list(ex.map(fn, items))


def row_blocks(n: int, size: int) -> list[tuple[int, int]]:
    return [(i, min(i + size, n)) for i in range(0, n, size)]
