import numpy as np
import pytest
from scipy import stats

from gradscores.baselines import ScoreReport
from gradscores.evaluation import (
    PerformanceTable,
    alpha_check,
    evaluate,
    regret,
    spearman,
)
from gradscores.features import materialize
from gradscores.scores import grace_loo
from gradscores.synth import SynthSpec, generate

from conftest import random_proc
from test_scores import proc_from_rows


# ---------------------------------------------------------------- spearman


def test_spearman_monotone():
    assert spearman([1, 2, 3], [10, 20, 30]) == 1.0
    assert spearman([1, 2, 3], [30, 20, 10]) == -1.0


def test_spearman_tie_worked_example():
    # ranks x=[1.5,1.5,3], y=[1,2,3] -> rank-Pearson 0.8660254
    assert spearman([1, 1, 2], [1, 2, 3]) == pytest.approx(0.8660254, abs=1e-7)


@pytest.mark.filterwarnings("ignore::scipy.stats.ConstantInputWarning")
def test_spearman_matches_scipy_with_ties(rng):
    for _ in range(200):
        k = int(rng.integers(3, 12))
        xs = rng.integers(0, 5, k).astype(float)
        ys = rng.integers(0, 5, k).astype(float)
        expect = stats.spearmanr(xs, ys).statistic
        got = spearman(xs, ys)
        if np.isnan(expect):
            assert got is None
        else:
            assert got == pytest.approx(expect, abs=1e-12)


def test_spearman_degenerate_and_errors():
    assert spearman([1, 1, 1], [1, 2, 3]) is None
    with pytest.raises(ValueError):
        spearman([1, 2], [1, 2, 3])
    with pytest.raises(ValueError):
        spearman([1], [2])


def test_spearman_monotone_transform_invariance(rng):
    xs = rng.standard_normal(8)
    ys = rng.standard_normal(8)
    assert spearman(xs, ys) == spearman(np.exp(xs), ys)


# ---------------------------------------------------------------- regret


def test_regret_cases():
    perf = PerformanceTable({"A": 50.0, "B": 40.0, "C": 60.0})
    r, chosen = regret({"A": 1.0, "B": 2.0, "C": 3.0}, perf, "lower_better")
    assert (r, chosen) == (10.0, "A")
    r, chosen = regret({"A": 1.0, "B": 2.0, "C": 3.0}, perf, "higher_better")
    assert (r, chosen) == (0.0, "C")


def test_regret_tie_break_lexicographic():
    perf = PerformanceTable({"A": 50.0, "B": 40.0})
    r, chosen = regret({"A": 1.0, "B": 1.0}, perf, "lower_better")
    assert (r, chosen) == (0.0, "A")


def test_regret_affine_invariance(rng):
    perf = PerformanceTable({t: float(p) for t, p in zip("ABCDE", [10, 30, 20, 50, 40])})
    scores = {t: float(rng.standard_normal()) for t in "ABCDE"}
    base = regret(scores, perf, "higher_better")
    shifted = {t: 3.0 * v + 7.0 for t, v in scores.items()}
    assert regret(shifted, perf, "higher_better") == base


def test_regret_missing_teacher():
    perf = PerformanceTable({"A": 50.0})
    with pytest.raises(KeyError):
        regret({"A": 1.0, "B": 2.0}, perf, "lower_better")


# ---------------------------------------------------------------- evaluate


def make_report(tid, entries):
    rep = ScoreReport(teacher_id=tid)
    for name, value in entries.items():
        rep.add(name, value)
    return rep


def test_evaluate_monotone_construction():
    perf = PerformanceTable({"A": 30.0, "B": 40.0, "C": 50.0})
    reports = [
        make_report("A", {"G-Norm": 3.0, "G-Vendi": 1.0}),
        make_report("B", {"G-Norm": 2.0, "G-Vendi": 2.0}),
        make_report("C", {"G-Norm": 1.0, "G-Vendi": 3.0}),
    ]
    records, warnings = evaluate(reports, perf)
    assert warnings == []
    by_score = {r["score"]: r for r in records}
    assert by_score["G-Norm"]["spearman"] == -1.0
    assert by_score["G-Norm"]["regret"] == 0.0
    assert by_score["G-Vendi"]["spearman"] == 1.0
    assert by_score["G-Vendi"]["chosen_teacher"] == "C"
    assert set(records[0]) == {"score", "spearman", "abs_spearman", "chosen_teacher", "regret"}


def test_evaluate_excludes_missing_teachers():
    perf = PerformanceTable({"A": 30.0, "B": 40.0})
    reports = [
        make_report("A", {"G-Norm": 3.0}),
        make_report("B", {"G-Norm": 2.0}),
        make_report("C", {"G-Norm": 1.0}),
    ]
    records, warnings = evaluate(reports, perf)
    assert len(warnings) == 1 and "teacher 'C'" in warnings[0]
    assert records[0]["chosen_teacher"] == "B"


def test_evaluate_needs_two_teachers():
    perf = PerformanceTable({"A": 30.0})
    with pytest.raises(ValueError):
        evaluate([make_report("A", {"G-Norm": 1.0})], perf)


def test_performance_table_csv(tmp_path):
    path = tmp_path / "perf.csv"
    path.write_text("teacher_id,performance\nA,50\nB,40\n")
    table = PerformanceTable.from_csv(path)
    assert table.entries == {"A": 50.0, "B": 40.0}
    bad = tmp_path / "bad.csv"
    bad.write_text("teacher_id,performance\nA,150\n")
    with pytest.raises(ValueError):
        PerformanceTable.from_csv(bad)


# ---------------------------------------------------------------- alpha check


def test_alpha_identical_rows_degenerate():
    fs = generate(SynthSpec(kind="identical", n=5, m=1, d=4, seed=2))
    report = alpha_check(materialize(fs))
    assert report.usable_prompts == 0
    assert report.skipped_prompts == 5
    assert report.mean_alpha is None


def test_alpha_nonnegative_and_finite(rng):
    fs = generate(SynthSpec(kind="lowrank", n=8, m=2, d=6, seed=5, noise=0.3))
    report = alpha_check(materialize(fs), nu=1e-3)
    assert all(t >= 0.0 for t in report.term1)
    assert all(t >= 0.0 for t in report.term2)
    assert report.usable_prompts >= 1
    assert np.isfinite(report.mean_alpha)
    for a in report.alphas:
        assert a is None or a >= 0.0


def test_alpha_inverse_sqrt_matches_dense_oracle(rng):
    from gradscores.evaluation import _inv_sqrt
    from gradscores.moments import eig_sym, second_moment, smooth

    proc = random_proc(rng, 5, 2, 6)
    keep = proc.prompt_ids != 2
    sig_hat = smooth(second_moment(proc.rows_h_tilde[keep]), 1e-3)
    got = _inv_sqrt(eig_sym(sig_hat))
    vals, vecs = np.linalg.eigh(sig_hat)
    oracle = vecs @ np.diag(vals**-0.5) @ vecs.T
    assert np.abs(got - oracle).max() < 1e-8
    np.testing.assert_allclose(got @ got, np.linalg.inv(sig_hat), atol=1e-8)


def test_alpha_term1_matches_loo_variance(rng):
    # for m=1, sum of whitened centered norms over prompts reproduces the
    # leave-one-out variance component
    proc = random_proc(rng, 7, 1, 5)
    report = alpha_check(proc, nu=1e-3)
    n = proc.n
    recomputed = sum(t1 * n**2 for t1 in report.term1) / n
    loo = grace_loo(proc, nu=1e-3)
    assert recomputed == pytest.approx(loo.variance_term, abs=1e-8)


def test_alpha_requires_three_prompts(rng):
    with pytest.raises(ValueError):
        alpha_check(random_proc(rng, 2, 1, 4))
