"""Shared helpers: seeded RNG construction and deterministic parallel mapping.

All randomness in the package flows through :func:`rng_from`, which builds a
PCG64 generator from a ``numpy.random.SeedSequence`` over a tuple of integer
keys.  Derived streams (per trial, per tau level) extend the key tuple instead
of drawing from a parent generator, so results never depend on scheduling or
on how many other streams were created first.

:func:`parallel_map` evaluates a pure function over a task list, optionally on
a thread pool.  Results are always returned in task order, which makes every
downstream reduction independent of the thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

__all__ = ["rng_from", "parallel_map"]

T = TypeVar("T")
R = TypeVar("R")


def rng_from(*keys: int) -> np.random.Generator:
    """A PCG64 generator seeded from an explicit tuple of integer keys."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(keys))))


def parallel_map(fn: Callable[[T], R], tasks: Sequence[T], threads: int = 1) -> list[R]:
    """Map ``fn`` over ``tasks``, in task order, optionally with a thread pool.

    The thread count changes wall-clock behaviour only; the returned list is
    identical for any ``threads`` value because ordering is preserved and each
    task must be self-contained (no shared mutable state).
    """
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks))
