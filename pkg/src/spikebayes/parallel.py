"""Worker pool shared by the Monte Carlo estimators and the figure harness.

Tasks carry their own derived seeds, so results depend only on the task
list, never on how tasks are spread across workers.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterable
from multiprocessing import Pool
from typing import TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(func: Callable[[T], R], tasks: Iterable[T], threads: int = 1) -> list[R]:
    """Apply `func` to every task, preserving task order.

    With threads <= 1 the map runs in-process; otherwise a
    multiprocessing Pool is used, so `func` and the tasks must be
    picklable (module-level functions and frozen dataclasses).
    """
    tasks = list(tasks)
    if threads <= 1 or len(tasks) <= 1:
        return [func(task) for task in tasks]
    workers = min(threads, len(tasks))
    logger.debug("dispatching %d tasks to %d workers", len(tasks), workers)
    with Pool(processes=workers) as pool:
        return pool.map(func, tasks)
