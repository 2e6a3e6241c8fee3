"""Seed handling and derived random streams.

Replicate ensembles are cut into fixed-size blocks.  Block ``j`` of an
ensemble seeded with ``seed`` always draws from the PCG64 stream derived from
``SeedSequence(seed, spawn_key=(tag, j))``, whichever process executes it, so
serial and parallel runs give the same numbers.
"""
from concurrent.futures import ProcessPoolExecutor

import numpy as np

__all__ = [
    "BLOCK_SIZE",
    "as_seed",
    "as_generator",
    "stream",
    "blocks",
    "run_blocks",
]

BLOCK_SIZE = 1024


def as_seed(seed):
    """Normalise ``seed`` (int, SeedSequence, Generator or None) to an int.

    A Generator is consumed for one 63-bit draw, which keeps functions that
    accept either a seed or a generator reproducible.
    """
    if seed is None:
        return int(np.random.SeedSequence().entropy % (2**63))
    if isinstance(seed, np.random.Generator):
        return int(seed.integers(0, 2**63))
    if isinstance(seed, np.random.SeedSequence):
        return int(seed.generate_state(2, np.uint64)[0] >> np.uint64(1))
    seed = int(seed)
    if seed < 0:
        raise ValueError("seed must be non-negative")
    return seed


def as_generator(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(as_seed(rng))


def stream(seed, *key):
    """Generator for the sub-stream ``key`` of ``seed``."""
    ss = np.random.SeedSequence(as_seed(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def blocks(n, block=BLOCK_SIZE):
    """Yield ``(j, start, stop)`` for a replicate range of length ``n``."""
    for j, start in enumerate(range(0, n, block)):
        yield j, start, min(start + block, n)


def _run_block(args):
    fn, seed, tag, j, start, stop, fn_args = args
    return start, stop, fn(stream(seed, tag, j), stop - start, *fn_args)


def run_blocks(fn, n, seed, *fn_args, tag=0, jobs=1, block=BLOCK_SIZE):
    """Evaluate ``fn(rng, count, *fn_args)`` block-wise and concatenate.

    ``fn`` must return a tuple of 1-D arrays of length ``count``.  With
    ``jobs > 1`` blocks are spread over worker processes; output does not
    depend on ``jobs``.
    """
    seed = as_seed(seed)
    tasks = [(fn, seed, tag, j, a, b, fn_args) for j, a, b in blocks(n, block)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_run_block, tasks))
    else:
        parts = [_run_block(t) for t in tasks]
    parts.sort(key=lambda p: p[0])
    if not parts:
        return ()
    width = len(parts[0][2])
    return tuple(np.concatenate([p[2][i] for p in parts]) for i in range(width))
