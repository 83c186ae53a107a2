"""Deterministic random substreams keyed by (seed, *path)."""

from __future__ import annotations

import zlib

import numpy as np

DEFAULT_SEED = 20190601


def _key_part(part: int | str) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode())
    if part < 0:
        raise ValueError("substream keys must be non-negative")
    return int(part)


def substream(seed: int, *key: int | str) -> np.random.Generator:
    """Independent generator for the path ``key`` under ``seed``.

    The same ``(seed, key)`` always yields the same stream regardless of the
    order in which substreams are requested.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_key_part(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))
