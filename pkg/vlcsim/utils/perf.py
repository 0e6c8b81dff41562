"""Wall-clock timing of traces, sweeps and optimizer runs."""
import time
from contextlib import contextmanager
from functools import wraps
from typing import Dict, Iterator

from loguru import logger


@contextmanager
def stopwatch(label: str) -> Iterator[Dict[str, float]]:
    """time the enclosed block; the yielded dict gets its "seconds" on exit."""
    timing = {"seconds": float("nan")}
    start = time.perf_counter()
    try:
        yield timing
    finally:
        timing["seconds"] = time.perf_counter() - start
        logger.debug(f"[{label}] took {timing['seconds']:.2f} s")


def perftimer(func):
    @wraps(func)
    def timeit_wrapper(*args, **kwargs):
        with stopwatch(func.__qualname__):
            return func(*args, **kwargs)

    return timeit_wrapper
