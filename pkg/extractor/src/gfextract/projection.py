"""Seed-addressable Rademacher projection, independently implemented.

This must stay bit-compatible with the consumer toolkit's projection: entry
(i, j) of the d x D matrix takes the k-th SplitMix64 output at k = i*D + j
(output = mix(seed + (k+1)*GOLDEN)), sign +1 when its top bit is 0, scaled by
1/sqrt(D). The golden-vector test pins this contract.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_MSB = np.uint64(1) << np.uint64(63)


@dataclass(frozen=True)
class ProjectionSpec:
    seed: int
    source_dim: int
    target_dim: int

    def __post_init__(self):
        if self.target_dim < 1 or self.source_dim < self.target_dim:
            raise ValueError("need 1 <= target_dim <= source_dim")


def mix(z: int) -> int:
    z &= MASK64
    z = (z ^ (z >> 30)) * _M1 & MASK64
    z = (z ^ (z >> 27)) * _M2 & MASK64
    return z ^ (z >> 31)


def entry(spec: ProjectionSpec, i: int, j: int) -> float:
    if not (0 <= i < spec.target_dim and 0 <= j < spec.source_dim):
        raise IndexError("entry index out of range")
    k = i * spec.source_dim + j
    sign = 1.0 if mix(spec.seed + (k + 1) * GOLDEN) < (1 << 63) else -1.0
    return sign / np.sqrt(spec.source_dim)


def sign_block(spec: ProjectionSpec, i: int, j_start: int, count: int) -> np.ndarray:
    """Signs (+-1.0) for columns j_start .. j_start+count-1 of row i, vectorized."""
    if j_start < 0 or j_start + count > spec.source_dim:
        raise IndexError("column block out of range")
    k = np.arange(
        i * spec.source_dim + j_start + 1,
        i * spec.source_dim + j_start + count + 1,
        dtype=np.uint64,
    )
    z = (np.uint64(spec.seed & MASK64) + k * np.uint64(GOLDEN)).astype(np.uint64)
    z ^= z >> np.uint64(30)
    z *= np.uint64(_M1)
    z ^= z >> np.uint64(27)
    z *= np.uint64(_M2)
    z ^= z >> np.uint64(31)
    return np.where(z & _MSB, -1.0, 1.0)


def project_blocks(spec: ProjectionSpec, blocks: list[np.ndarray]) -> np.ndarray:
    """Project a gradient given as consecutive flat blocks covering all D dims.

    The full D-vector is never materialized; per target row the sign stream is
    generated block by block at the matching column offsets.
    """
    sizes = [b.size for b in blocks]
    if sum(sizes) != spec.source_dim:
        raise ValueError(
            f"blocks cover {sum(sizes)} dims, spec.source_dim is {spec.source_dim}"
        )
    out = np.zeros(spec.target_dim)
    scale = 1.0 / np.sqrt(spec.source_dim)
    for i in range(spec.target_dim):
        offset = 0
        acc = 0.0
        for block in blocks:
            flat = np.asarray(block, dtype=np.float64).ravel()
            acc += float(sign_block(spec, i, offset, flat.size) @ flat)
            offset += flat.size
        out[i] = scale * acc
    return out
