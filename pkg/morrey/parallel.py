"""Ordered worker pool shared by the radius loops."""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

from .errors import ConfigError

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

_workers = 1


def set_workers(count: int) -> None:
    global _workers
    if count < 1:
        raise ConfigError(f"worker count must be at least 1, got {count}")
    _workers = int(count)
    logger.debug("worker count set to %d", _workers)


def get_workers() -> int:
    return _workers


def map_ordered(fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
    """Apply fn to every item; results come back in input order.

    Tasks never share mutable state, so the output does not depend on the
    number of workers.
    """
    items = list(items)
    if _workers == 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=_workers) as pool:
        return list(pool.map(fn, items))
