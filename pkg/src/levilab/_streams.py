"""Per-path random streams and block-parallel execution.

Every path owns a counter-based Philox stream keyed by (master seed, path
index), so the numbers drawn for a path do not depend on how paths are
grouped into blocks or which worker runs them.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

#: Paths simulated together in one vectorized block.
BLOCK_SIZE = 256

THREADS_ENV = "LEVILAB_THREADS"


def default_threads():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def path_generator(seed, index):
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))


class PathStreams:
    """Generators for a contiguous range of path indices."""

    def __init__(self, seed, indices):
        self.indices = np.asarray(indices)
        self._gens = [path_generator(seed, i) for i in self.indices]

    def __len__(self):
        return len(self._gens)

    def normal(self, shape):
        """Array of shape ``(n_paths, *shape)``, one row per path stream."""
        return np.stack([g.standard_normal(shape) for g in self._gens])

    def uniform(self, shape):
        return np.stack([g.random(shape) for g in self._gens])


def blocks(n, block_size=BLOCK_SIZE):
    return [np.arange(s, min(s + block_size, n)) for s in range(0, n, block_size)]


def map_blocks(fn, n, threads=1, block_size=BLOCK_SIZE):
    """Run ``fn(indices)`` over fixed path blocks; results come back in block order."""
    parts = blocks(n, block_size)
    threads = threads or 1
    if threads <= 1 or len(parts) <= 1:
        return [fn(p) for p in parts]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, parts))


def mean_and_se(values):
    """Mean and standard error with exactly rounded (order-free) sums."""
    values = np.asarray(values, dtype=float).ravel()
    n = values.size
    if n == 0:
        return math.nan, math.nan
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((values - mean) ** 2) / (n - 1)
    return mean, math.sqrt(var / n)
