"""Order-preserving parallel map over independent work items."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, TypeVar

import numpy as np

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """
    Map fn over items, in worker processes when threads > 1.

    fn must be a picklable top-level function. Results come back in input order,
    so output never depends on the worker count.
    """
    items = list(items)
    if threads < 1:
        raise ValueError(f"threads must be at least 1, got {threads}")
    if threads == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    workers = min(threads, len(items))
    logger.debug("parallel_map: %d items on %d workers", len(items), workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def item_seed(seed: int, index: int) -> int:
    """Seed for work item `index`, independent of how items are scheduled."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])
