"""Small shared helpers: seed derivation and the optional thread pool."""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def spawn_seeds(seed, n):
    """Derive n independent child SeedSequences from a seed or SeedSequence."""
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return root.spawn(n)


def thread_count():
    """Worker cap from FF_THREADS; defaults to 1 (serial)."""
    raw = os.environ.get("FF_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def run_indexed(fn, n_items):
    """Run fn(i) for i in range(n_items), honoring FF_THREADS.

    Results come back in index order regardless of scheduling, so output
    is identical whether the pool is used or not. fn must be safe to call
    concurrently (tree builders are: each call owns its RNG stream).
    """
    workers = thread_count()
    if workers <= 1 or n_items <= 1:
        return [fn(i) for i in range(n_items)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n_items)))
