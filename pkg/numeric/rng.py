# numeric/rng.py

import zlib
from typing import Union

import numpy as np

Key = Union[int, str]


def _as_entropy(key: Key) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    if key < 0:
        raise ValueError(f"seed keys must be non-negative, got {key}")
    return int(key)


def make_rng(seed: int, *keys: Key) -> np.random.Generator:
    """
    PCG64 generator seeded from (seed, *keys).

    Every consumer derives its own stream from the run seed plus a stable key
    (a component name, a step index, ...), so adding a consumer never shifts
    the numbers another one sees.
    """
    entropy = [_as_entropy(seed)] + [_as_entropy(k) for k in keys]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def derive_seed(seed: int, *keys: Key) -> int:
    """A 32-bit child seed for APIs that take plain integers."""
    entropy = [_as_entropy(seed)] + [_as_entropy(k) for k in keys]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])
