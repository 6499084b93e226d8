"""Worker-count control.

All parallelism in the package (numba kernels, batched FFTs) is capped by a
single process-wide worker count.  Results are bit-identical for any cap:
every reduction assigns each output cell to exactly one worker and visits
rows in a fixed order.
"""

import os

_workers = max(1, os.cpu_count() or 1)


def get_workers() -> int:
    return _workers


def set_workers(count: int) -> None:
    global _workers
    if count < 1:
        raise ValueError("worker count must be >= 1")
    _workers = count
    try:
        import numba

        numba.set_num_threads(min(count, numba.config.NUMBA_NUM_THREADS))
    except ImportError:  # pragma: no cover - numba is a hard dependency
        pass
