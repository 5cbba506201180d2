"""Seeded random streams.

A child stream is keyed by ``(seed, trial, purpose)`` so that any trial can be
re-run alone and gets the same draws regardless of execution order.
"""

import zlib

import numpy as np


def _tag(purpose: str) -> int:
    return zlib.crc32(purpose.encode())


def child_rng(seed: int, trial: int = 0, purpose: str = "") -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(trial), _tag(purpose)]))


def kernel_seed(rng: np.random.Generator) -> int:
    """A 32-bit seed for a compiled kernel, drawn from ``rng``."""
    return int(rng.integers(0, 2**32 - 1))


def as_rng(rng: np.random.Generator | int | None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        raise ValueError("a seed or Generator is required; ambient entropy is not used")
    return np.random.default_rng(int(rng))
