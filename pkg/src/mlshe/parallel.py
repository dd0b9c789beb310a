"""Seed-parallel maps with order-fixed reductions.

Every ensemble member is a pure function of its seed, so running members in
worker processes cannot change their values.  Results always come back in
seed order and every reduction in the package runs sequentially over that
list, which is why the ``strict_reduce`` switch never changes a number; it is
kept so configurations can state the requirement explicitly.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

__all__ = ["default_workers", "map_seeds"]


def default_workers() -> int:
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:  # pragma: no cover - non-Linux
        return max(1, os.cpu_count() or 1)


def map_seeds(fn, seeds, workers: int = 1, chunksize: int = 8) -> list:
    """``[fn(s) for s in seeds]``, optionally in ``workers`` processes.

    ``fn`` must be picklable (a module-level function or ``functools.partial``).
    """
    seeds = list(seeds)
    if workers <= 1 or len(seeds) < 2:
        return [fn(s) for s in seeds]
    with ProcessPoolExecutor(max_workers=min(workers, len(seeds))) as ex:
        return list(ex.map(fn, seeds, chunksize=chunksize))
