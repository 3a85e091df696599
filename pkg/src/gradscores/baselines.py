"""Comparison scores: Gram log-determinants, same-prompt gradient agreement,
validation-set influence, and scalar metadata averages.

Each score carries a fixed orientation (which direction predicts a better
teacher) so downstream evaluation can pick argbest consistently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .features import ProcessedGradients
from .moments import EIGENVALUE_FLOOR, eig_sym

LOWER_BETTER = "lower_better"
HIGHER_BETTER = "higher_better"

# Canonical orientation per score name; None means no preferred direction
# by default (the caller may configure one).
ORIENTATIONS: dict[str, str | None] = {
    "GRACE": LOWER_BETTER,
    "GRACE-Variance": LOWER_BETTER,
    "GRACE-Bias": LOWER_BETTER,
    "G-Norm": LOWER_BETTER,
    "G-Vendi": HIGHER_BETTER,
    "Determinant": HIGHER_BETTER,
    "BADGE": HIGHER_BETTER,
    "SamePromptCosine": HIGHER_BETTER,
    "SamePromptInner": HIGHER_BETTER,
    "Influence": HIGHER_BETTER,
    "Loss": LOWER_BETTER,
    "AvgProb": HIGHER_BETTER,
    "AvgLength": None,
    "TeacherPerf": HIGHER_BETTER,
}


@dataclass
class ScoreReport:
    teacher_id: str
    entries: list[tuple[str, float, str | None]] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def add(self, name: str, value: float, orientation: str | None = "default"):
        if any(e[0] == name for e in self.entries):
            raise ValueError(f"duplicate score name '{name}'")
        if orientation == "default":
            orientation = ORIENTATIONS[name]
        self.entries.append((name, float(value), orientation))

    def value(self, name: str) -> float:
        for n, v, _ in self.entries:
            if n == name:
                return v
        raise KeyError(name)


def gram_logdet(
    proc: ProcessedGradients, normalized: bool = True, jitter: float = 1e-9
) -> float:
    """Log-determinant of the jittered k x k Gram matrix of the rows.

    normalized=True uses unit rows (a pure diversity measure); False uses the
    length-scaled rows, folding in gradient magnitude. Higher is better.
    Computed as sum(ln(lam + jitter)) over the Gram spectrum; the jitter keeps
    rank-deficient Grams finite.
    """
    if jitter <= 0:
        raise ValueError("jitter must be > 0")
    rows = proc.rows_h_tilde if normalized else proc.rows_h
    if rows.shape[0] == 0:
        raise ValueError("empty input")
    lam, _ = eig_sym(rows @ rows.T)
    lam = np.maximum(lam, 0.0)
    lam[lam < EIGENVALUE_FLOOR] = 0.0  # rank-deficient modes hit exactly ln(jitter)
    return float(np.log(lam + jitter).sum())


def same_prompt_pairwise(proc: ProcessedGradients, normalized: bool = True) -> float:
    """Mean over prompts of the mean pairwise agreement between generations.

    normalized=True averages cosines of unit rows; False averages raw inner
    products of the length-scaled rows. Needs at least one prompt with two or
    more surviving generations.
    """
    if proc.m < 2:
        raise ValueError("same-prompt scores need m >= 2 generations per prompt")
    rows = proc.rows_h_tilde if normalized else proc.rows_h
    per_prompt = []
    for p in np.unique(proc.prompt_ids):
        block = rows[proc.prompt_ids == p]
        k = block.shape[0]
        if k < 2:
            continue
        gram = block @ block.T
        idx = np.triu_indices(k, 1)
        per_prompt.append(float(gram[idx].mean()))
    if not per_prompt:
        raise ValueError("no prompt has >= 2 generations")
    return float(np.mean(per_prompt))


def influence(
    train: ProcessedGradients,
    val: ProcessedGradients,
    preconditioned_checkpoints: list[np.ndarray] | None = None,
    lr_weights: list[float] | None = None,
) -> float:
    """Mean cosine between training rows and held-out validation rows.

    With checkpoint matrices present, the cosine uses preconditioned training
    rows per checkpoint, combined as a learning-rate-weighted average (the
    preconditioned rows are supplied externally; optimizer-state capture is
    out of scope here). Higher is better.
    """
    if val.num_rows == 0:
        raise ValueError("empty validation set")
    if train.d != val.d:
        raise ValueError(f"dimension mismatch: train d={train.d}, val d={val.d}")
    val_unit = val.rows_h_tilde

    if preconditioned_checkpoints is None:
        return float((train.rows_h_tilde @ val_unit.T).mean())

    if lr_weights is None or len(lr_weights) != len(preconditioned_checkpoints):
        raise ValueError("lr_weights must match preconditioned_checkpoints")
    weight_sum = float(np.sum(lr_weights))
    acc = 0.0
    for w, ckpt in zip(lr_weights, preconditioned_checkpoints):
        ckpt = np.asarray(ckpt, dtype=np.float64)
        if ckpt.shape != (train.num_rows, train.d):
            raise ValueError("checkpoint rows must match the training set shape")
        unit = ckpt / np.linalg.norm(ckpt, axis=1, keepdims=True)
        acc += w * float((unit @ val_unit.T).mean())
    return acc / weight_sum


def scalar_score(
    scalars: dict[str, np.ndarray], field_name: str, num_rows: int
) -> float:
    """Arithmetic mean of a per-sample scalar field over all n*m samples."""
    if field_name not in scalars:
        raise KeyError(f"scalar field '{field_name}' missing from metadata")
    arr = np.asarray(scalars[field_name], dtype=np.float64)
    if arr.shape != (num_rows,):
        raise ValueError(
            f"scalar field '{field_name}' has length {arr.shape[0]}, expected {num_rows}"
        )
    return float(arr.mean())
