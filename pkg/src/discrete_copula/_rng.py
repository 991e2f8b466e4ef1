"""Seeded, partition-invariant random streams.

Draws are produced in fixed-size chunks; chunk ``c`` of a stream keyed by
``(seed, *key)`` always uses the counter-based Philox generator seeded from
``SeedSequence(seed, spawn_key=(*key, c))``.  Splitting the chunks across any
number of worker threads therefore reproduces the sequential output exactly.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

CHUNK = 1 << 16
THREADS_ENV = "DISCRETE_COPULA_THREADS"

T = TypeVar("T")


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def generator(seed: int, *key: int) -> np.random.Generator:
    """Independent Philox generator for the stream ``(seed, *key)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def chunk_sizes(n: int, chunk: int = CHUNK) -> list[int]:
    if n < 0:
        raise ValueError("n must be nonnegative")
    full, rest = divmod(n, chunk)
    return [chunk] * full + ([rest] if rest else [])


def parallel_map(fn: Callable[[int], T], items: Sequence[int], threads: int | None = None) -> list[T]:
    """``[fn(i) for i in items]`` evaluated on up to ``threads`` workers, order kept."""
    threads = default_threads() if threads is None else max(1, int(threads))
    if threads == 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))


def chunked_draws(
    draw: Callable[[np.random.Generator, int], T],
    n: int,
    seed: int,
    *key: int,
    threads: int | None = None,
    chunk: int = CHUNK,
) -> list[T]:
    """Run ``draw(rng, size)`` once per chunk of an ``n``-draw stream."""
    sizes = chunk_sizes(n, chunk)
    return parallel_map(lambda c: draw(generator(seed, *key, c), sizes[c]), range(len(sizes)), threads)
