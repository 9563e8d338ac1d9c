"""Keyed random streams.

Every consumer of randomness derives its own generator from a root seed plus
a tuple of keys, so results never depend on call order or worker count.
"""

import zlib

import numpy as np


def _key(k):
    if isinstance(k, str):
        return zlib.crc32(k.encode("utf-8"))
    k = int(k)
    if k < 0:
        raise ValueError("stream keys must be nonnegative")
    return k


def stream(seed, *keys) -> np.random.Generator:
    """Return a generator for the sub-stream ``(seed, *keys)``.

    String keys are hashed with CRC32 so tags are stable across runs and
    platforms.
    """
    entropy = [_key(seed)] + [_key(k) for k in keys]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
