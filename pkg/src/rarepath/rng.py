"""Keyed random streams.

Every random draw in the package comes from a :class:`numpy.random.Generator`
backed by Philox4x64, a counter-based generator. A stream is identified by a
master seed plus a key path such as ``(trajectory_index, "trajectory")``. The
key path is folded into a :class:`numpy.random.SeedSequence` spawn key, so
streams with different keys are statistically independent and a stream never
depends on how many other streams were created before it. That is what makes
serial and threaded runs produce identical bytes.

String tags are mapped to integers with CRC-32 of their UTF-8 encoding.
"""

from __future__ import annotations

import zlib

import numpy as np

UINT64_MASK = (1 << 64) - 1


def _key_word(part: int | str) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    if isinstance(part, (bool, np.bool_)) or int(part) < 0:
        raise ValueError(f"stream key parts must be non-negative ints or strings, got {part!r}")
    return int(part)


def seed_sequence(seed: int, *key: int | str) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(seed) & UINT64_MASK, spawn_key=tuple(_key_word(k) for k in key))


def stream(seed: int, *key: int | str) -> np.random.Generator:
    """Return the Philox generator for ``seed`` at the given key path."""
    return np.random.Generator(np.random.Philox(seed_sequence(seed, *key)))


def derive_seed(seed: int, *key: int | str) -> int:
    """A 64-bit seed for a sub-component, e.g. the cohort or the forest."""
    return int(seed_sequence(seed, *key).generate_state(1, dtype=np.uint64)[0])
