"""Child-seed derivation.

Every random stream in an experiment is keyed by ``(master, role, *index)``
so adding a grid point or a permutation never shifts the randomness of any
other run.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    if isinstance(part, float):
        return zlib.crc32(part.hex().encode("ascii"))
    return int(part)


def derive_seed(master: int, role: str, *index) -> int:
    """Return a 63-bit seed determined only by ``master``, ``role`` and ``index``.

    Float indices (e.g. a target rate) are keyed by their exact bit pattern.
    """
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=(_key(role), *map(_key, index)))
    hi, lo = (int(v) for v in ss.generate_state(2, dtype=np.uint32))
    return ((hi << 32) | lo) >> 1


def make_rng(seed: int) -> np.random.Generator:
    """The package-wide generator: numpy PCG64 seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(int(seed)))
