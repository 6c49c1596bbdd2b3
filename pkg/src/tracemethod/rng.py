"""Deterministic random substreams.

Every stochastic step derives its generator from a root seed plus a tuple
of integer keys, so results do not depend on evaluation order or on how
work is split across threads.
"""
from __future__ import annotations

from typing import Union

import numpy as np

SeedLike = Union[int, np.random.SeedSequence]


def as_seed_sequence(seed: SeedLike) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if seed is None:
        raise ValueError("an explicit seed is required")
    return np.random.SeedSequence(int(seed))


def substream(seed: SeedLike, *keys: int) -> np.random.SeedSequence:
    """Child seed sequence addressed by ``keys`` under ``seed``."""
    root = as_seed_sequence(seed)
    return np.random.SeedSequence(
        entropy=root.entropy,
        spawn_key=tuple(root.spawn_key) + tuple(int(k) for k in keys),
        pool_size=root.pool_size,
    )


def generator(seed: SeedLike, *keys: int) -> np.random.Generator:
    return np.random.default_rng(substream(seed, *keys))
