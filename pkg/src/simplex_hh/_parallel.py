"""Ordered thread-pool map honouring ``SIMPLEX_HH_THREADS``."""

from __future__ import annotations

import hashlib
import os
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "SIMPLEX_HH_THREADS"


def thread_count(requested: int | None = None) -> int:
    if requested is not None:
        return max(1, int(requested))
    raw = os.environ.get(THREADS_ENV, "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def pmap(fn: Callable[[T], R], items: Iterable[T], threads: int | None = None) -> list[R]:
    """``[fn(x) for x in items]``, possibly evaluated in parallel; order is preserved."""
    items = list(items)
    workers = min(thread_count(threads), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def derive_seed(seed: int, *labels: object) -> int:
    """64-bit sub-seed obtained by hashing ``seed`` together with ``labels``."""
    text = ":".join([str(int(seed))] + [str(x) for x in labels]).encode()
    return int.from_bytes(hashlib.blake2b(text, digest_size=8).digest(), "little")
