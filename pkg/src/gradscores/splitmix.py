"""SplitMix64 utilities: the single PRNG primitive used everywhere.

Every random choice in this package (projection signs, fold shuffles,
synthetic rows) is derived from SplitMix64 so that results are exactly
reproducible across runs, worker counts, and reimplementations in other
languages. The k-th output of a stream is computable in O(1):

    out_k = mix(seed + (k + 1) * GOLDEN)   (mod 2^64)
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix(z: int) -> int:
    """SplitMix64 finalizer on a 64-bit integer."""
    z &= MASK64
    z = (z ^ (z >> 30)) * _M1 & MASK64
    z = (z ^ (z >> 27)) * _M2 & MASK64
    return z ^ (z >> 31)


def stream_at(seed: int, k: int) -> int:
    """k-th output of the SplitMix64 stream seeded with `seed` (random access)."""
    return mix((seed + (k + 1) * GOLDEN) & MASK64)


def stream_block(seed: int, start: int, count: int) -> np.ndarray:
    """Outputs k = start .. start+count-1 of the stream, as uint64, vectorized."""
    k = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    z = (np.uint64(seed & MASK64) + k * np.uint64(GOLDEN)).astype(np.uint64)
    z ^= z >> np.uint64(30)
    z *= np.uint64(_M1)
    z ^= z >> np.uint64(27)
    z *= np.uint64(_M2)
    z ^= z >> np.uint64(31)
    return z


def uniform01_block(seed: int, start: int, count: int) -> np.ndarray:
    """Doubles in (0, 1], from the top 53 bits of each stream output."""
    bits = stream_block(seed, start, count) >> np.uint64(11)
    return (bits.astype(np.float64) + 1.0) * 2.0**-53


def gaussian_block(seed: int, start: int, count: int) -> np.ndarray:
    """`count` standard normals via Box-Muller over the stream.

    Consumes 2*ceil(count/2) stream outputs beginning at `start`; positions are
    explicit so rows can be generated independently with per-row offsets.
    """
    pairs = (count + 1) // 2
    u = uniform01_block(seed, start, 2 * pairs)
    u1, u2 = u[:pairs], u[pairs:]
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    out = np.empty(2 * pairs)
    out[0::2] = r * np.cos(theta)
    out[1::2] = r * np.sin(theta)
    return out[:count]


def shuffled_indices(n: int, seed: int) -> list[int]:
    """Fisher-Yates permutation of range(n) driven by the sequential stream."""
    perm = list(range(n))
    pos = 0
    for i in range(n - 1, 0, -1):
        j = stream_at(seed, pos) % (i + 1)
        pos += 1
        perm[i], perm[j] = perm[j], perm[i]
    return perm
