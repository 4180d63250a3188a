"""Seeded randomness.

Every random draw in the package flows from a single 64-bit seed through
the counter-based Philox4x64 generator ("philox4x64-v1"): independent
substreams are derived by folding a string/int path into the second key
word with a splitmix64-style mixer, so any result is replayable from
(seed, path) alone.
"""

from __future__ import annotations

import numpy as np

GENERATOR_NAME = "philox4x64-v1"

_MASK64 = (1 << 64) - 1


def _splitmix64(state: int) -> int:
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _fold_path(path) -> int:
    acc = 0x243F6A8885A308D3
    for part in path:
        if isinstance(part, str):
            for byte in part.encode():
                acc = _splitmix64(acc ^ byte)
        else:
            acc = _splitmix64(acc ^ (int(part) & _MASK64))
    return acc


def stream(seed: int, *path) -> np.random.Generator:
    """Derive the named Philox substream of a 64-bit master seed."""
    key = np.array([seed & _MASK64, _fold_path(path)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
