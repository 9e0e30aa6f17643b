# besselab/services/parallel.py
# Ordered parallel map for sweeps and refinement ladders.
# Notes:
# - One level of threads: maps started inside a worker run serially, and transforms
#   inside a worker use a single thread, so BESSELAB_THREADS bounds the whole run.

import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from besselab import config

T = TypeVar("T")
R = TypeVar("R")

_local = threading.local()


def in_worker() -> bool:
    """True on a thread started by ordered_map."""
    return getattr(_local, "worker", False)


def transform_workers() -> int:
    """Thread count for scipy.fft calls made from the current thread."""
    return 1 if in_worker() else config.threads()


def _as_worker(fn: Callable[[T], R]) -> Callable[[T], R]:
    def run(item: T) -> R:
        _local.worker = True
        return fn(item)

    return run


def ordered_map(
    fn: Callable[[T], R], items: Iterable[T], max_workers: Optional[int] = None
) -> List[R]:
    """
    Apply `fn` to every item, results in input order regardless of completion order.

    Runs serially when only one worker is available, when there is a single item, or
    when called from inside another ordered_map worker.
    Exceptions (including escalated warnings) surface from the first failing item.
    """
    work = list(items)
    workers = min(max_workers or config.threads(), len(work))
    if workers <= 1 or in_worker():
        return [fn(item) for item in work]
    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="besselab") as pool:
        return list(pool.map(_as_worker(fn), work))
