"""Counter-based random streams.

Every random quantity is a pure function of ``(seed, stream path, counter)``
so results never depend on how work is split across workers.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

# stream tags
PARAMS = 1
INNOVATIONS = 2
BOOTSTRAP = 3
TRUTH = 4


def _mix_int(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & MASK64
    return z ^ (z >> 31)


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(0xBF58476D1CE4E5B9)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def derive_key(seed: int, *path: int) -> int:
    """64-bit stream key for ``seed`` and an integer path (e.g. replication, tag)."""
    key = _mix_int((int(seed) & MASK64) + GOLDEN & MASK64)
    for p in path:
        key = _mix_int((key ^ (int(p) & MASK64)) + GOLDEN & MASK64)
    return key


def raw_bits(key: int, counters) -> np.ndarray:
    """SplitMix64 outputs at the given counter positions of stream ``key``."""
    c = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        state = np.uint64(key) + (c + np.uint64(1)) * np.uint64(GOLDEN)
        return _mix_array(state)


def uniform_indices(key: int, draws, n: int) -> np.ndarray:
    """Index matrix ``(len(draws), n)`` of i.i.d. uniform picks from ``0..n-1``.

    Row ``b`` depends only on ``(key, draws[b])``.
    """
    if not 1 <= n < 2 ** 31:
        raise ValueError("population size must be in [1, 2**31)")
    draws = np.atleast_1d(np.asarray(draws, dtype=np.uint64))
    counters = (draws[:, None] << np.uint64(32)) | np.arange(n, dtype=np.uint64)[None, :]
    hi = raw_bits(key, counters) >> np.uint64(32)
    return ((hi * np.uint64(n)) >> np.uint64(32)).astype(np.intp)


def generator(seed: int, *path: int) -> np.random.Generator:
    """Philox generator keyed by ``seed`` and ``path``."""
    return np.random.Generator(np.random.Philox(key=derive_key(seed, *path)))
