"""The three core gradient-distribution scores.

* g_norm  — mean squared processed-gradient norm, Tr(Sigma). Lower is better:
  small gradients mean the student is already near an optimum for this data.
* g_vendi — entropy of the eigenvalues of the normalized second moment.
  Higher is better: rewards directional spread.
* grace   — cross-validated whitened norm: per fold, the trace of the held-out
  second moment under the inverse smoothed normalized second moment of the
  remaining folds. Lower is better. Reported together with its variance
  (globally centered rows) and bias (mean-row quadratic form) components.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .features import ProcessedGradients
from .moments import eig_sym, second_moment, spectral_entropy
from .splitmix import shuffled_indices


@dataclass
class PartitionScheme:
    c: int
    seed: int
    folds: list[list[int]]  # disjoint prompt-index lists covering range(n)


@dataclass
class GraceResult:
    total: float
    variance_term: float
    bias_term: float
    per_fold: list[float]
    c: int
    nu: float


def partition(n: int, c: int, seed: int) -> PartitionScheme:
    """Shuffle prompts (seeded Fisher-Yates) and deal them into c blocks.

    The first n % c folds get ceil(n/c) prompts, the rest floor(n/c), so fold
    sizes differ by at most one. All m generations of a prompt follow it.
    """
    if c < 2 or c > n:
        raise ValueError(f"fold count must satisfy 2 <= c <= n, got c={c}, n={n}")
    perm = shuffled_indices(n, seed)
    base, extra = divmod(n, c)
    folds, start = [], 0
    for i in range(c):
        size = base + (1 if i < extra else 0)
        folds.append(perm[start : start + size])
        start += size
    return PartitionScheme(c=c, seed=seed, folds=folds)


def g_norm(proc: ProcessedGradients) -> float:
    """Tr(Sigma) = mean squared row norm. Lower is better."""
    if proc.num_rows == 0:
        raise ValueError("empty input")
    return float((proc.norms**2).mean())


def g_vendi(proc: ProcessedGradients) -> float:
    """Spectral entropy (nats) of the normalized second moment. Higher is better."""
    if proc.num_rows == 0:
        raise ValueError("empty input")
    vals, _ = eig_sym(second_moment(proc.rows_h_tilde))
    return spectral_entropy(vals)


def _fold_masks(proc: ProcessedGradients, folds: list[list[int]]) -> list[np.ndarray]:
    masks = []
    for fold in folds:
        mask = np.isin(proc.prompt_ids, fold)
        if not mask.any():
            raise ValueError("fold with zero samples (all rows dropped?)")
        masks.append(mask)
    return masks


def grace(
    proc: ProcessedGradients,
    c: int = 10,
    nu: float = 1e-3,
    seed: int = 0,
    scheme: PartitionScheme | None = None,
) -> GraceResult:
    """Cross-validated whitened-norm score over a prompt partition.

    Per fold i with complement rows H_-i and held-out rows H_i:
      per_fold[i] = sum_k (lam_k + nu/d)^-1 * mean_{h in H_i} (h . v_k)^2
    where (lam_k, v_k) is the eigensystem of the complement's normalized
    second moment. total is the mean over folds. The inverse is applied via
    the eigendecomposition (shift by nu/d, reciprocate), never an explicit
    matrix inverse.
    """
    if nu <= 0:
        raise ValueError("nu must be > 0")
    if scheme is None:
        scheme = partition(proc.n, c, seed)
    d = proc.d
    masks = _fold_masks(proc, scheme.folds)
    mu = proc.rows_h.mean(axis=0)
    total_rows = proc.num_rows

    per_fold: list[float] = []
    variance_parts: list[float] = []
    bias_parts: list[float] = []
    for mask in masks:
        comp_tilde = proc.rows_h_tilde[~mask]
        if comp_tilde.shape[0] == 0:
            raise ValueError("empty complement for a fold")
        lam, vecs = eig_sym(second_moment(comp_tilde))
        inv = 1.0 / (np.maximum(lam, 0.0) + nu / d)

        held = proc.rows_h[mask]
        proj = held @ vecs  # (k, d) coordinates in the eigenbasis
        per_fold.append(float((inv * (proj**2).mean(axis=0)).sum()))
        centered = (held - mu) @ vecs
        variance_parts.append(float((inv * (centered**2).sum(axis=0)).sum()))
        mu_proj = vecs.T @ mu
        bias_parts.append(float((inv * mu_proj**2).sum()))

    # fsum: cross-fold reductions are exactly rounded, so results do not
    # depend on fold iteration order (singleton folds are permutation-invariant)
    return GraceResult(
        total=math.fsum(per_fold) / len(per_fold),
        variance_term=math.fsum(variance_parts) / total_rows,
        bias_term=math.fsum(bias_parts) / total_rows,
        per_fold=per_fold,
        c=scheme.c,
        nu=nu,
    )


def grace_loo(proc: ProcessedGradients, nu: float = 1e-3) -> GraceResult:
    """Leave-one-prompt-out variant: C = n with singleton folds."""
    scheme = PartitionScheme(
        c=proc.n, seed=0, folds=[[p] for p in range(proc.n)]
    )
    return grace(proc, nu=nu, scheme=scheme)
