"""Counter-based random streams keyed by (seed, unit index).

Each unit of work (trajectory, sample batch, probe batch) gets its own Philox
stream whose counter starts at a key-dependent offset, so results do not
depend on how work is split across threads.
"""
import os

import numpy as np

MASK64 = (1 << 64) - 1


def stream(seed: int, index: int = 0, tag: int = 0) -> np.random.Generator:
    """Independent generator for work unit ``index`` of purpose ``tag``."""
    if seed < 0 or index < 0 or tag < 0:
        raise ValueError("seed, index and tag must be non-negative")
    counter = np.array([0, 0, index & MASK64, tag & MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=seed & MASK64, counter=counter))


def worker_count(requested=None) -> int:
    """Requested workers, capped by HORIZONLAB_THREADS when set."""
    n = requested if requested else (os.cpu_count() or 1)
    cap = os.environ.get("HORIZONLAB_THREADS")
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, int(n))
