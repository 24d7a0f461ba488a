"""Seeded, splittable random streams.

Every random draw in the package is keyed by ``(seed, tag, block)`` where a block
covers ``BLOCK`` consecutive sample indices.  A sample's value therefore depends
only on the seed and its own index, never on which worker produced it or in
which order blocks were consumed.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

BLOCK = 4096
DEFAULT_SEED = 20240601
WORKERS_ENV = "COMPSIM_WORKERS"

# fixed tags so independent consumers never share a stream
TAG_QDRIFT = 1
TAG_PARTITION = 2
TAG_INSTANCES = 3
TAG_MOMENTS = 4

T = TypeVar("T")
R = TypeVar("R")


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the key ``(seed, *key)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, key)])))


def uniforms(seed: int, tag: int, start: int, stop: int) -> np.ndarray:
    """Uniform draws for sample indices ``start..stop-1`` of stream ``tag``.

    Index ``i`` always receives the same value, whatever slice it is requested in.
    """
    if stop <= start:
        return np.empty(0)
    out = np.empty(stop - start)
    b0, b1 = start // BLOCK, (stop - 1) // BLOCK
    for b in range(b0, b1 + 1):
        block = stream(seed, tag, b).random(BLOCK)
        lo = max(start, b * BLOCK)
        hi = min(stop, (b + 1) * BLOCK)
        out[lo - start:hi - start] = block[lo - b * BLOCK:hi - b * BLOCK]
    return out


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def ordered_map(fn: Callable[[T], R], items: Iterable[T], workers: int | None = None) -> list[R]:
    """``map`` over a thread pool; results keep input order."""
    items = list(items)
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def chunks(n: int, size: int) -> Sequence[tuple[int, int]]:
    return [(i, min(n, i + size)) for i in range(0, n, size)]
