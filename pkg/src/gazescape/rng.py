"""Counter-based deterministic randomness.

Every random decision in the engine (prompt picks, per-cycle generation
seeds, scene prompt rotation) is derived from a 64-bit session seed plus a
counter, never from global RNG state, so a session replays bit-identically
from its gaze log and config alone.
"""

from __future__ import annotations

import hashlib

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """One splitmix64 scramble step; full-period 64-bit mixer."""
    x = (x + _GOLDEN) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def mix64(seed: int, counter: int) -> int:
    """Derive an independent 64-bit value from (seed, counter)."""
    return splitmix64((seed & _MASK64) ^ splitmix64(counter & _MASK64))


def unit_float(h: int) -> float:
    """Map a 64-bit hash to a float in [0, 1) using the top 53 bits."""
    return (h >> 11) / float(1 << 53)


def stable_text_hash(text: str) -> int:
    """64-bit hash of a string, stable across processes and Python versions."""
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")
