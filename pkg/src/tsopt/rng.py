"""Counter-based random streams keyed by ``(run_seed, iteration, role)``.

Each key maps to an independent Philox stream, so methods and baselines that
share a run seed never consume each other's draws.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key_parts(part) -> list[int]:
    if isinstance(part, (tuple, list)):
        return [v for p in part for v in _key_parts(p)]
    if isinstance(part, str):
        return [zlib.crc32(part.encode())]
    if isinstance(part, (float, np.floating)) and not float(part).is_integer():
        return [zlib.crc32(repr(float(part)).encode())]
    value = int(part)
    # SeedSequence entropy must be non-negative
    return [value] if value >= 0 else [zlib.crc32(str(value).encode()), 1]


def stream(*key) -> np.random.Generator:
    """Generator for the stream named by ``key`` (ints, floats, strings, nested tuples).

    A ``Generator`` passed as the sole key is returned unchanged.
    """
    if len(key) == 1 and isinstance(key[0], np.random.Generator):
        return key[0]
    entropy = _key_parts(key) or [0]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
