"""
Thread-pool helpers shared by optimizer starts, scans and Monte Carlo blocks.
"""

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Callable, List, Optional, Sequence, TypeVar

import numpy as np

from config import thread_count

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def run_indexed(fn: Callable[[T], R], items: Sequence[T],
                max_workers: Optional[int] = None) -> List[R]:
    """
    Apply fn to every item in parallel and return results in input order.

    Args:
        fn: Work function, called once per item
        items: Inputs
        max_workers: Thread cap (NONLOCAL_THREADS when None)

    Returns:
        List of results aligned with items
    """
    if max_workers is None:
        max_workers = thread_count()
    if max_workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]

    results: List[Optional[R]] = [None] * len(items)
    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        future_to_index = {
            executor.submit(fn, item): i
            for i, item in enumerate(items)
        }
        for future in as_completed(future_to_index):
            index = future_to_index[future]
            try:
                results[index] = future.result()
            except Exception as e:
                logger.error(f"Worker failed on item {index}: {e}")
                raise
    return results


SEED_MASK = (1 << 64) - 1


def derived_rng(seed: int, *keys: int) -> np.random.Generator:
    """
    Counter-based generator for one shard of a seeded computation.

    The same (seed, keys) always yields the same stream, independent of how
    many shards exist or which thread runs them.
    """
    sequence = np.random.SeedSequence(int(seed) & SEED_MASK,
                                      spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(sequence))
