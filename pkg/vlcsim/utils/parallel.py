"""Worker-count policy and an order-preserving process map."""
import os
from multiprocessing import Pool
from typing import Callable, Iterable, List, Optional

from loguru import logger
from tqdm import tqdm

THREADS_ENV = "VLC_SIM_THREADS"


def resolve_workers(requested: Optional[int] = None) -> int:
    """number of worker processes to use.

    `requested` wins when given; otherwise VLC_SIM_THREADS caps the pool.
    0 (or unset) means one worker per CPU.
    """
    if requested is None:
        raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
        try:
            requested = int(raw)
        except ValueError:
            logger.warning(f"ignoring non-integer {THREADS_ENV}={raw!r}")
            requested = 0

    if requested < 0:
        raise ValueError(f"worker count must be >= 0, got {requested}")

    cpus = os.cpu_count() or 1
    return cpus if requested == 0 else min(requested, cpus)


def ordered_map(
    func: Callable,
    tasks: Iterable,
    n_workers: int = 1,
    desc: Optional[str] = None,
    progress: bool = False,
) -> List:
    """map `func` over `tasks`, returning results in task order.

    With a single worker everything runs in-process, which keeps tracebacks
    readable and avoids nesting pools inside pool workers.
    """
    tasks = list(tasks)
    pbar = tqdm(total=len(tasks), desc=desc, disable=not progress)

    if n_workers <= 1 or len(tasks) <= 1:
        results = []
        for task in tasks:
            results.append(func(task))
            pbar.update(1)
        pbar.close()
        return results

    results = []
    with Pool(processes=min(n_workers, len(tasks))) as pool:
        # imap yields in submission order regardless of completion order
        for result in pool.imap(func, tasks):
            results.append(result)
            pbar.update(1)
    pbar.close()

    return results
