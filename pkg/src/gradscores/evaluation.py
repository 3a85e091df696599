"""Score-vs-performance analysis: Spearman correlation, selection regret,
and the preconditioner-stability ratio check.

Given per-teacher score reports and a table of post-distillation student
performance, this module measures how well each score ranks the teachers and
how much performance is lost by trusting the score's top pick.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .baselines import HIGHER_BETTER, LOWER_BETTER, ScoreReport
from .features import ProcessedGradients
from .moments import eig_sym, second_moment, smooth


@dataclass
class PerformanceTable:
    entries: dict[str, float] = field(default_factory=dict)

    def validate(self) -> None:
        for tid, perf in self.entries.items():
            if not (0.0 <= perf <= 100.0):
                raise ValueError(
                    f"performance for '{tid}' is {perf}, expected a percentage in [0, 100]"
                )

    @classmethod
    def from_csv(cls, path) -> "PerformanceTable":
        table = cls()
        with open(path, newline="") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames is None or not {
                "teacher_id",
                "performance",
            } <= set(reader.fieldnames):
                raise ValueError("perf CSV needs header 'teacher_id,performance'")
            for row in reader:
                tid = row["teacher_id"]
                if tid in table.entries:
                    raise ValueError(f"duplicate teacher_id '{tid}' in perf CSV")
                table.entries[tid] = float(row["performance"])
        table.validate()
        return table


@dataclass
class AlphaReport:
    """Per-prompt stability terms of the whitening matrix and their ratio."""

    term1: list[float]          # (1/n^2) ||S_-p^{-1/2} g_mu(p)||^2
    term2: list[float]          # ||(S_-p^{-1/2} - mean_q S_-q^{-1/2}) mu||^2
    alphas: list[float | None]  # term2/term1, None where term1 is degenerate
    mean_alpha: float | None
    usable_prompts: int
    skipped_prompts: int
    nu: float


DEGENERATE_TERM1 = 1e-15


def _fractional_ranks(xs: np.ndarray) -> np.ndarray:
    """Ranks 1..k with ties assigned the average of their positions."""
    order = np.argsort(xs, kind="stable")
    ranks = np.empty(len(xs))
    i = 0
    while i < len(xs):
        j = i
        while j + 1 < len(xs) and xs[order[j + 1]] == xs[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(xs, ys) -> float | None:
    """Pearson correlation of tie-averaged ranks; None if either side is constant.

    The rank-Pearson form stays correct under ties, unlike the
    6*sum(d^2) shortcut.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape:
        raise ValueError("length mismatch")
    if xs.ndim != 1 or len(xs) < 2:
        raise ValueError("need at least two aligned values")
    rx, ry = _fractional_ranks(xs), _fractional_ranks(ys)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = np.sqrt((rx**2).sum() * (ry**2).sum())
    if denom == 0.0:
        return None
    return float(np.clip((rx * ry).sum() / denom, -1.0, 1.0))


def regret(
    scores: dict[str, float],
    perf: PerformanceTable,
    orientation: str,
) -> tuple[float, str]:
    """Performance gap of the score-selected teacher vs the best teacher.

    The chosen teacher is the argbest score under its orientation, ties broken
    by lexicographically smallest teacher_id so the result is reproducible.
    """
    if orientation not in (LOWER_BETTER, HIGHER_BETTER):
        raise ValueError(f"invalid orientation {orientation!r}")
    missing = [t for t in scores if t not in perf.entries]
    if missing:
        raise KeyError(f"teachers missing from performance table: {missing}")
    if not scores:
        raise ValueError("no teachers to choose from")
    sign = 1.0 if orientation == LOWER_BETTER else -1.0
    chosen = min(sorted(scores), key=lambda t: (sign * scores[t], t))
    best = max(perf.entries[t] for t in scores)
    return best - perf.entries[chosen], chosen


def evaluate(
    reports: list[ScoreReport], perf: PerformanceTable
) -> tuple[list[dict], list[str]]:
    """Per-score Spearman/regret records over the teachers present in both inputs.

    Returns (records, warnings); teachers missing from either side are
    excluded and reported as warnings. Each record has exactly the fields
    score, spearman, abs_spearman, chosen_teacher, regret.
    """
    warnings = []
    by_teacher = {r.teacher_id: r for r in reports}
    common = sorted(set(by_teacher) & set(perf.entries))
    for t in sorted(set(by_teacher) - set(perf.entries)):
        warnings.append(f"teacher '{t}' has scores but no performance entry; excluded")
    for t in sorted(set(perf.entries) - set(by_teacher)):
        warnings.append(f"teacher '{t}' has performance but no scores; excluded")
    if len(common) < 2:
        raise ValueError("need at least 2 teachers present in both inputs")

    score_names: list[str] = []
    for r in reports:
        for name, _, _ in r.entries:
            if name not in score_names:
                score_names.append(name)

    perfs = np.array([perf.entries[t] for t in common])
    records = []
    for name in score_names:
        try:
            values = {t: by_teacher[t].value(name) for t in common}
        except KeyError:
            warnings.append(f"score '{name}' missing for some teachers; skipped")
            continue
        orientation = next(
            o for r in reports for n, _, o in r.entries if n == name
        )
        rho = spearman([values[t] for t in common], perfs)
        if orientation in (LOWER_BETTER, HIGHER_BETTER):
            reg, chosen = regret(values, perf, orientation)
        else:
            reg, chosen = None, None
        records.append(
            {
                "score": name,
                "spearman": rho,
                "abs_spearman": None if rho is None else abs(rho),
                "chosen_teacher": chosen,
                "regret": reg,
            }
        )
    return records, warnings


def _inv_sqrt(sigma_hat_eigs: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    vals, vecs = sigma_hat_eigs
    return (vecs * (1.0 / np.sqrt(np.maximum(vals, 0.0)))) @ vecs.T


def alpha_check(proc: ProcessedGradients, nu: float = 1e-3) -> AlphaReport:
    """Leave-one-prompt-out stability ratio of the whitening matrix.

    For each prompt p: drop all its generations, form the smoothed normalized
    second moment of the rest and its inverse square root S_-p^{-1/2}; then
      term1 = (1/n^2) ||S_-p^{-1/2} (mean of p's rows - mu)||^2
      term2 = ||(S_-p^{-1/2} - mean_q S_-q^{-1/2}) mu||^2
    alpha = term2 / term1 averaged over prompts where term1 is non-degenerate.
    """
    if proc.n < 3:
        raise ValueError("alpha check needs n >= 3 prompts")
    if nu <= 0:
        raise ValueError("nu must be > 0")
    n, d = proc.n, proc.d
    mu = proc.rows_h.mean(axis=0)

    inv_sqrts = []
    for p in range(n):
        keep = proc.prompt_ids != p
        if not keep.any() or keep.all():
            raise ValueError(f"prompt {p} has no rows or owns all rows")
        sig_hat = smooth(second_moment(proc.rows_h_tilde[keep]), nu)
        inv_sqrts.append(_inv_sqrt(eig_sym(sig_hat)))
    mean_inv_sqrt = np.mean(inv_sqrts, axis=0)

    term1, term2, alphas = [], [], []
    usable = 0
    alpha_sum = 0.0
    for p in range(n):
        g_mu = proc.rows_h[proc.prompt_ids == p].mean(axis=0) - mu
        t1 = float(np.sum((inv_sqrts[p] @ g_mu) ** 2)) / n**2
        t2 = float(np.sum(((inv_sqrts[p] - mean_inv_sqrt) @ mu) ** 2))
        term1.append(t1)
        term2.append(t2)
        if t1 >= DEGENERATE_TERM1:
            alphas.append(t2 / t1)
            alpha_sum += t2 / t1
            usable += 1
        else:
            alphas.append(None)
    return AlphaReport(
        term1=term1,
        term2=term2,
        alphas=alphas,
        mean_alpha=(alpha_sum / usable) if usable else None,
        usable_prompts=usable,
        skipped_prompts=n - usable,
        nu=nu,
    )
