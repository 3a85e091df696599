"""Seed-addressable Rademacher projection with entries +-1/sqrt(D).

Any entry (i, j) of the d x D sign matrix is computable in O(1) from
(seed, i, j, D) without materializing the matrix, so the same projection can
be evaluated block-by-block against models with billions of parameters and
reproduced bit-exactly by independent implementations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .splitmix import MASK64, stream_at, stream_block

_MSB = np.uint64(1) << np.uint64(63)


@dataclass(frozen=True)
class ProjectionSpec:
    seed: int
    source_dim: int
    target_dim: int

    def __post_init__(self):
        if self.target_dim < 1:
            raise ValueError("target_dim must be >= 1")
        if self.source_dim < self.target_dim:
            raise ValueError("source_dim must be >= target_dim")
        if not (0 <= self.seed <= MASK64):
            raise ValueError("seed must fit in 64 bits")


def entry(spec: ProjectionSpec, i: int, j: int) -> float:
    """Entry (i, j): +1/sqrt(D) when the MSB of the k-th stream output is 0."""
    if not (0 <= i < spec.target_dim):
        raise IndexError(f"row {i} out of range for target_dim {spec.target_dim}")
    if not (0 <= j < spec.source_dim):
        raise IndexError(f"column {j} out of range for source_dim {spec.source_dim}")
    k = i * spec.source_dim + j
    sign = 1.0 if stream_at(spec.seed, k) < (1 << 63) else -1.0
    return sign / np.sqrt(spec.source_dim)


def sign_block(spec: ProjectionSpec, i: int, j_start: int, count: int) -> np.ndarray:
    """Signs (+-1.0, without the 1/sqrt(D) scale) for columns j_start..j_start+count-1 of row i."""
    if not (0 <= i < spec.target_dim):
        raise IndexError(f"row {i} out of range for target_dim {spec.target_dim}")
    if j_start < 0 or j_start + count > spec.source_dim:
        raise IndexError("column block out of range")
    k0 = i * spec.source_dim + j_start
    bits = stream_block(spec.seed, k0, count)
    return np.where(bits & _MSB, -1.0, 1.0)


def project(spec: ProjectionSpec, vector: np.ndarray) -> np.ndarray:
    """Apply the projection to a length-D vector, returning d values."""
    vector = np.asarray(vector, dtype=np.float64)
    if vector.shape != (spec.source_dim,):
        raise ValueError(
            f"vector has shape {vector.shape}, expected ({spec.source_dim},)"
        )
    out = np.empty(spec.target_dim)
    scale = 1.0 / np.sqrt(spec.source_dim)
    for i in range(spec.target_dim):
        out[i] = scale * sign_block(spec, i, 0, spec.source_dim) @ vector
    return out
