"""
Deterministic 64-bit integer mixing.

Partitioning, per-vertex random choices and result checksums must not depend on
Python's salted hash(), so they all go through the splitmix64 finalizer below.
"""

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB


def mix64(value: int) -> int:
    """splitmix64 finalizer on a Python integer."""
    x = (value + _GOLDEN) & MASK64
    x = ((x ^ (x >> 30)) * _MUL1) & MASK64
    x = ((x ^ (x >> 27)) * _MUL2) & MASK64
    return x ^ (x >> 31)


def hash_pair(first: int, second: int) -> int:
    """Order-sensitive hash of two integers (e.g. seed and vertex id)."""
    return mix64(mix64(first & MASK64) ^ (second & MASK64))


def mix64_array(values: np.ndarray) -> np.ndarray:
    """Vectorised mix64 over an unsigned 64-bit array (wraps modulo 2**64)."""
    with np.errstate(over="ignore"):
        x = values.astype(np.uint64) + np.uint64(_GOLDEN)
        x = (x ^ (x >> np.uint64(30))) * np.uint64(_MUL1)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(_MUL2)
    return x ^ (x >> np.uint64(31))


def hash_ids(ids: np.ndarray, seed: int) -> np.ndarray:
    """hash_pair(seed, id) for every id, vectorised."""
    salt = np.uint64(mix64(seed & MASK64))
    return mix64_array(salt ^ ids.astype(np.uint64))
