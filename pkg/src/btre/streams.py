"""Replicate-keyed random streams and the worker fan-out.

Every replicate draws from its own Philox stream keyed by
``(master seed, stream family, index)``, so results never depend on how
replicates are spread over worker processes.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

# stream families
REPLICATE = 0
BATCH = 1
ENVIRONMENT = 2
BOOTSTRAP = 3
DRAW = 4

T = TypeVar("T")


def stream(seed: int, family: int, *index: int) -> np.random.Generator:
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(family, *index))
    return np.random.Generator(np.random.Philox(ss))


def replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    return stream(seed, REPLICATE, replicate)


def resolve_workers(workers) -> int:
    if workers in (None, "auto"):
        return os.cpu_count() or 1
    workers = int(workers)
    if workers < 1:
        raise ValueError("workers must be >= 1")
    return workers


def _run_chunk(args):
    fn, items = args
    return [fn(item) for item in items]


def fan_out(fn: Callable[[int], T], indices: Sequence[int], workers=1) -> list[T]:
    """Map ``fn`` over ``indices`` preserving order; ``fn`` must be picklable."""
    workers = resolve_workers(workers)
    indices = list(indices)
    if workers == 1 or len(indices) < 2:
        return [fn(i) for i in indices]
    n_chunks = min(len(indices), workers * 4)
    bounds = np.linspace(0, len(indices), n_chunks + 1).astype(int)
    chunks = [(fn, indices[a:b]) for a, b in zip(bounds, bounds[1:]) if b > a]
    out: list[T] = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(_run_chunk, chunks):
            out.extend(part)
    return out
