"""Seeded synthetic feature-set generators with controlled spectral structure.

These exist for oracle tests and ordering demonstrations: each kind pins a
known property (rank-1 spectrum, uniform spectrum, target spectrum, a
constructed good/bad teacher pair). Gaussian draws come from Box-Muller over
the SplitMix64 stream with per-row offsets, so output is a pure function of
the spec.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import GradientFeatureSet
from .splitmix import gaussian_block

KINDS = ("identical", "orthonormal", "lowrank", "from_spectrum", "two_teacher_contrast")

DEFAULT_LENGTH = 32  # constant response length: scaling is a uniform factor


@dataclass
class SynthSpec:
    kind: str
    n: int
    m: int
    d: int
    seed: int = 0
    rank: int = 2
    noise: float = 0.1
    spectrum: list[float] | None = None
    length: int = DEFAULT_LENGTH
    length_range: tuple[int, int] | None = None
    teacher_id: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind '{self.kind}'")
        if self.n < 1 or self.m < 1 or self.d < 1:
            raise ValueError("n, m, d must be >= 1")
        k = self.n * self.m
        if self.kind == "orthonormal" and k > self.d:
            raise ValueError(f"orthonormal needs n*m <= d, got {k} > {self.d}")
        if self.kind == "lowrank" and not (1 <= self.rank <= min(k, self.d)):
            raise ValueError("rank must be in [1, min(n*m, d)]")
        if self.kind == "from_spectrum":
            if not self.spectrum or len(self.spectrum) > self.d:
                raise ValueError("from_spectrum needs a spectrum of length <= d")
            if any(s < 0 for s in self.spectrum) or abs(sum(self.spectrum) - 1) > 1e-9:
                raise ValueError("spectrum must be nonnegative and sum to 1")
        if self.length < 2:
            raise ValueError("length must be >= 2")


def _row_gauss(seed: int, row: int, d: int) -> np.ndarray:
    # Disjoint stream segment per row; stride rounded up to an even count.
    stride = 2 * ((d + 1) // 2)
    return gaussian_block(seed, row * stride, d)


def _lengths(spec: SynthSpec) -> np.ndarray:
    k = spec.n * spec.m
    if spec.length_range is None:
        return np.full(k, spec.length, dtype=np.uint32)
    lo, hi = spec.length_range
    if lo < 2 or hi < lo:
        raise ValueError("length_range must satisfy 2 <= lo <= hi")
    # Separate stream domain from row gaussians.
    u = gaussian_block(spec.seed ^ 0x6C656E, 0, k)
    return (lo + (np.abs(u) * 1000).astype(np.uint64) % (hi - lo + 1)).astype(np.uint32)


def _pack(spec: SynthSpec, rows: np.ndarray, teacher_id: str) -> GradientFeatureSet:
    fs = GradientFeatureSet(
        teacher_id=teacher_id or f"synth-{spec.kind}-s{spec.seed}",
        n=spec.n,
        m=spec.m,
        d=spec.d,
        lengths=_lengths(spec),
        raw_rows=rows.astype(np.float32),
        projection_seed=spec.seed,
        source_dim=spec.d,
    )
    fs.validate()
    return fs


def _identical_rows(spec: SynthSpec) -> np.ndarray:
    direction = _row_gauss(spec.seed, 0, spec.d)
    direction /= np.linalg.norm(direction)
    return np.tile(direction, (spec.n * spec.m, 1))


def _orthonormal_rows(spec: SynthSpec) -> np.ndarray:
    k = spec.n * spec.m
    rows = np.stack([_row_gauss(spec.seed, r, spec.d) for r in range(k)])
    # Gram-Schmidt with one re-orthogonalization pass; k <= d guarantees success.
    basis = []
    for v in rows:
        for _ in range(2):
            for b in basis:
                v = v - (v @ b) * b
        norm = np.linalg.norm(v)
        if norm < 1e-10:
            raise ValueError("degenerate draw during orthonormalization")
        basis.append(v / norm)
    return np.stack(basis)


def _lowrank_rows(spec: SynthSpec) -> np.ndarray:
    k = spec.n * spec.m
    factors = np.stack(
        [_row_gauss(spec.seed ^ 0xFAC7, r, spec.d) for r in range(spec.rank)]
    )
    factors /= np.linalg.norm(factors, axis=1, keepdims=True)
    coeffs = np.stack(
        [_row_gauss(spec.seed ^ 0xC0EF, r, spec.rank) for r in range(k)]
    )
    noise = np.stack([_row_gauss(spec.seed, r, spec.d) for r in range(k)])
    return coeffs @ factors + spec.noise * noise


def _from_spectrum_rows(spec: SynthSpec) -> np.ndarray:
    """Unit rows along basis directions, apportioned so the empirical
    normalized-second-moment spectrum matches the target (largest remainder)."""
    k = spec.n * spec.m
    target = np.asarray(spec.spectrum, dtype=np.float64)
    counts = np.floor(target * k).astype(int)
    remainder = target * k - counts
    for idx in np.argsort(remainder)[::-1][: k - counts.sum()]:
        counts[idx] += 1
    rows = np.zeros((k, spec.d))
    r = 0
    for axis, cnt in enumerate(counts):
        for _ in range(cnt):
            sign = 1.0 if _row_gauss(spec.seed ^ 0x51, r, 1)[0] >= 0 else -1.0
            rows[r, axis] = sign
            r += 1
    return rows


def generate(spec: SynthSpec) -> GradientFeatureSet:
    """One feature set of the requested kind, deterministic in the seed."""
    if spec.kind == "identical":
        rows = _identical_rows(spec)
    elif spec.kind == "orthonormal":
        rows = _orthonormal_rows(spec)
    elif spec.kind == "lowrank":
        rows = _lowrank_rows(spec)
    elif spec.kind == "from_spectrum":
        rows = _from_spectrum_rows(spec)
    else:
        raise ValueError("use generate_pair for two_teacher_contrast")
    return _pack(spec, rows, spec.teacher_id)


def generate_pair(spec: SynthSpec) -> tuple[GradientFeatureSet, GradientFeatureSet]:
    """A constructed (aligned, random) teacher pair.

    The aligned set clusters around one direction with its norms scaled down
    10x; the random set is isotropic. By construction the aligned set has the
    smaller mean row norm and the smaller cross-validated whitened norm.
    """
    if spec.kind != "two_teacher_contrast":
        raise ValueError("generate_pair needs kind='two_teacher_contrast'")
    k = spec.n * spec.m
    direction = _row_gauss(spec.seed ^ 0xA11, 0, spec.d)
    direction /= np.linalg.norm(direction)
    aligned = np.stack(
        [
            0.1 * (direction + spec.noise * _row_gauss(spec.seed ^ 0xA22, r, spec.d))
            for r in range(k)
        ]
    )
    random_rows = np.stack(
        [_row_gauss(spec.seed ^ 0xB33, r, spec.d) for r in range(k)]
    )
    base = spec.teacher_id or f"synth-pair-s{spec.seed}"
    return (
        _pack(spec, aligned, base + "-aligned"),
        _pack(spec, random_rows, base + "-random"),
    )
