"""Exhaustive n-queens counting, streaming and uniform sampling.

Configurations are row-indexed column tuples: ``cols[y - 1] = x``.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterator

import numpy as np

__all__ = [
    "COUNT_LIMIT",
    "STREAM_LIMIT",
    "EnumerationError",
    "count_configurations",
    "enumerate_configurations",
    "all_configurations",
    "sample_uniform",
]

COUNT_LIMIT = 16
STREAM_LIMIT = 13


class EnumerationError(ValueError):
    pass


def _count_from(n: int, full: int, cols: int, ld: int, rd: int) -> int:
    if cols == full:
        return 1
    total = 0
    avail = full & ~(cols | ld | rd)
    while avail:
        bit = avail & -avail
        avail ^= bit
        total += _count_from(n, full, cols | bit, ((ld | bit) << 1) & full, (rd | bit) >> 1)
    return total


def _first_row_count(args) -> int:
    n, bit = args
    full = (1 << n) - 1
    return _count_from(n, full, bit, (bit << 1) & full, bit >> 1)


def count_configurations(n: int, jobs: int = 1) -> int:
    """Number of n-queens configurations by bitmask backtracking.

    Rows are filled in order with column and diagonal masks; no symmetry
    reduction.  ``jobs > 1`` splits the work over the first row's choices.
    """
    if n < 1:
        raise EnumerationError("n must be positive")
    if n > COUNT_LIMIT:
        raise EnumerationError(f"n={n} exceeds the counting limit {COUNT_LIMIT}")
    tasks = [(n, 1 << c) for c in range(n)]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(jobs) as pool:
            return sum(pool.map(_first_row_count, tasks))
    return sum(map(_first_row_count, tasks))


def enumerate_configurations(n: int) -> Iterator[tuple[int, ...]]:
    """Yield every configuration once, in lexicographic order of ``cols``."""
    if n < 1:
        raise EnumerationError("n must be positive")
    if n > STREAM_LIMIT:
        raise EnumerationError(f"n={n} exceeds the streaming limit {STREAM_LIMIT}")
    cols = [0] * n
    col_used = [False] * (n + 1)
    plus_used = [False] * (2 * n + 1)
    minus_used = [False] * (2 * n)

    def rec(y: int):
        if y > n:
            yield tuple(cols)
            return
        for x in range(1, n + 1):
            if col_used[x] or plus_used[x + y] or minus_used[y - x + n]:
                continue
            col_used[x] = plus_used[x + y] = minus_used[y - x + n] = True
            cols[y - 1] = x
            yield from rec(y + 1)
            col_used[x] = plus_used[x + y] = minus_used[y - x + n] = False

    yield from rec(1)


@lru_cache(maxsize=16)
def all_configurations(n: int) -> tuple[tuple[int, ...], ...]:
    return tuple(enumerate_configurations(n))


def sample_uniform(n: int, seed=None, rng: np.random.Generator | None = None) -> tuple[int, ...]:
    """One uniformly random configuration, by index into the full list."""
    sols = all_configurations(n)
    if not sols:
        raise EnumerationError(f"no configurations exist for n={n}")
    if rng is None:
        rng = np.random.default_rng(seed)
    return sols[int(rng.integers(len(sols)))]
