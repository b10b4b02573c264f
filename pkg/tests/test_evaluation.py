"""Protocol plumbing: splits, CV selection, metrics, group statistics.

The no-leakage test instruments the fit entry points rather than trusting
the implementation's structure; the permutation test is the independent
reference for the Welch statistic's significance calls.
"""

import math

import numpy as np
import pytest
import scipy.stats

import sparsebench.dataset as dsmod
import sparsebench.solvers as solmod
from sparsebench import (
    CLASSIFIER_KINDS,
    PAPER_LAMBDA_GRID,
    CVPlan,
    ConfusionMatrix,
    DataError,
    Dataset,
    ModalitySpec,
    ObjectiveKind,
    SolverConfig,
    SplitPlan,
    SyntheticSpec,
    compare_groups,
    compute_metrics,
    generate,
    kfold_indices,
    make_rng,
    run_protocol,
    select_lambda,
    stratified_split,
)

FAST_CFG = SolverConfig(max_iterations=4000, tolerance=1e-8)


def labeled(labels):
    labels = np.asarray(labels, dtype=np.int64)
    m = labels.shape[0]
    rng = make_rng(1000 + m)
    return Dataset(
        rng.standard_normal((m, 3)),
        labels,
        ("a", "b", "c"),
        tuple(f"s{i}" for i in range(m)),
    )


def noise_dataset(seed, m, n):
    rng = make_rng(seed)
    X = rng.standard_normal((m, n))
    y = np.array([0, 1] * (m // 2) + [0] * (m % 2), dtype=np.int64)
    return Dataset(X, y, tuple(f"g{j}" for j in range(n)), tuple(f"s{i}" for i in range(m)))


def full_modality(d):
    return ModalitySpec("all", d.feature_names)


# ------------------------------------------------------------------- splits


def test_split_arithmetic_60_40():
    labels = np.array([1] * 60 + [0] * 40)
    train, test = stratified_split(labels, SplitPlan(seed=4), 0)
    assert int(labels[train].sum()) == 54 and train.size - labels[train].sum() == 36
    assert int(labels[test].sum()) == 6 and test.size - labels[test].sum() == 4


def test_split_rounds_half_up():
    # 15 positives: 13.5 -> 14 in train; 10 negatives: exactly 9
    labels = np.array([1] * 15 + [0] * 10)
    train, _ = stratified_split(labels, SplitPlan(seed=0), 0)
    assert int(labels[train].sum()) == 14
    assert int((labels[train] == 0).sum()) == 9


def test_split_partition_over_random_label_vectors():
    rng = make_rng(17)
    plan = SplitPlan(repetitions=3, seed=9)
    for _ in range(100):
        m = int(rng.integers(10, 60))
        labels = rng.integers(0, 2, size=m)
        if labels.sum() < 2 or (m - labels.sum()) < 2:
            continue
        rep = int(rng.integers(0, 3))
        train, test = stratified_split(labels, plan, rep)
        assert np.array_equal(np.union1d(train, test), np.arange(m))
        assert np.intersect1d(train, test).size == 0


def test_split_deterministic_and_rep_sensitive():
    labels = np.array([0, 1] * 20)
    plan = SplitPlan(repetitions=5, seed=2)
    t1, e1 = stratified_split(labels, plan, 3)
    t2, e2 = stratified_split(labels, plan, 3)
    assert np.array_equal(t1, t2) and np.array_equal(e1, e2)
    t3, _ = stratified_split(labels, plan, 4)
    assert not np.array_equal(t1, t3)


def test_split_unstratified_mode():
    labels = np.array([1] * 30 + [0] * 10)
    train, test = stratified_split(labels, SplitPlan(stratified=False, seed=5), 0)
    assert train.size == 36 and test.size == 4
    assert np.array_equal(np.union1d(train, test), np.arange(40))


def test_split_errors():
    labels = np.array([0, 1] * 10)
    with pytest.raises(ValueError):
        stratified_split(labels, SplitPlan(repetitions=5), 5)
    with pytest.raises(DataError):
        stratified_split(np.array([1, 1, 1, 0]), SplitPlan(), 0)
    with pytest.raises(ValueError):
        SplitPlan(train_fraction=1.0)
    with pytest.raises(ValueError):
        SplitPlan(repetitions=0)


def test_kfold_sizes_m25_k10():
    labels = np.array([1] * 13 + [0] * 12)
    folds = kfold_indices(labels, CVPlan(folds=10, seed=1))
    sizes = sorted((f.size for f in folds), reverse=True)
    assert sizes == [3, 3, 3, 3, 3, 2, 2, 2, 2, 2]


def test_kfold_partition_and_determinism():
    labels = np.array([0, 1, 1] * 9)
    plan = CVPlan(folds=4, seed=8)
    folds = kfold_indices(labels, plan)
    assert np.array_equal(np.sort(np.concatenate(folds)), np.arange(27))
    again = kfold_indices(labels, plan)
    for f, g in zip(folds, again):
        assert np.array_equal(f, g)
    with pytest.raises(DataError):
        kfold_indices(np.array([0, 1, 0]), CVPlan(folds=4))


def test_kfold_stratification_balanced():
    labels = np.array([0] * 50 + [1] * 50)
    for fold in kfold_indices(labels, CVPlan(folds=10, seed=3)):
        assert int(labels[fold].sum()) == 5 and fold.size == 10


def test_cvplan_validation():
    with pytest.raises(ValueError):
        CVPlan(folds=1)
    with pytest.raises(ValueError):
        CVPlan(lambda_grid=())
    with pytest.raises(ValueError):
        CVPlan(lambda_grid=(0.1, 0.1))
    with pytest.raises(ValueError):
        CVPlan(lambda_grid=(1.0, -2.0))


# -------------------------------------------------------------- select_lambda


def test_select_lambda_singleton_grid():
    d = noise_dataset(21, 40, 4)
    lam, table = select_lambda(d, ObjectiveKind.LOGISTIC_L1, CVPlan(folds=5, lambda_grid=(0.05,)), FAST_CFG)
    assert lam == 0.05
    assert table.fold_accuracies.shape == (1, 5)
    assert table.mean_accuracies[0] == pytest.approx(table.fold_accuracies[0].mean())


def test_select_lambda_pure_noise_near_majority_rate():
    d = noise_dataset(33, 80, 5)
    majority = max(d.labels.mean(), 1 - d.labels.mean())
    lam, table = select_lambda(
        d, ObjectiveKind.LOGISTIC_L1, CVPlan(folds=10, lambda_grid=(1e-4, 1e-2, 1.0, 20.0), seed=5), FAST_CFG
    )
    best = float(table.mean_accuracies.max())
    assert abs(best - majority) <= 3 * math.sqrt(majority * (1 - majority) / d.n_samples)


def test_select_lambda_tie_prefers_larger():
    # both grid points sit above lambda_max -> identical null models -> tie
    d = noise_dataset(55, 40, 4)
    lam, table = select_lambda(d, ObjectiveKind.HINGE_L1, CVPlan(folds=4, lambda_grid=(10.0, 20.0)), FAST_CFG)
    assert np.array_equal(table.fold_accuracies[0], table.fold_accuracies[1])
    assert lam == 20.0


def test_select_lambda_strong_signal_interior():
    d, truth = generate(
        SyntheticSpec(
            m=100,
            n=10,
            support=((0, 1.8), (3, -1.4), (7, 1.1)),
            noise_model="margin",
            flip_prob=0.02,
            seed=14,
        )
    )
    lam, table = select_lambda(d, ObjectiveKind.LOGISTIC_L1, CVPlan(folds=10, seed=2), FAST_CFG)
    best = float(table.mean_accuracies.max())
    assert best >= 0.9
    assert PAPER_LAMBDA_GRID[0] < lam < PAPER_LAMBDA_GRID[-1]


def test_select_lambda_rejects_plain_kind():
    d = noise_dataset(60, 30, 3)
    with pytest.raises(ValueError):
        select_lambda(d, ObjectiveKind.LOGISTIC_PLAIN, CVPlan(folds=3, lambda_grid=(0.1,)))


# ------------------------------------------------------------------ metrics


def test_metrics_arithmetic_example():
    m = compute_metrics(ConfusionMatrix(tp=8, fp=4, tn=6, fn=2))
    assert m.accuracy == pytest.approx(0.7)
    assert m.sensitivity == pytest.approx(0.8)
    assert m.specificity == pytest.approx(0.6)


def test_metrics_perfect_and_degenerate():
    y = np.array([1, 0, 1, 0, 1, 0])
    perfect = compute_metrics(ConfusionMatrix.from_predictions(y, y))
    assert perfect.accuracy == perfect.sensitivity == perfect.specificity == 1.0
    all_one = compute_metrics(ConfusionMatrix.from_predictions(y, np.ones_like(y)))
    assert all_one.sensitivity == 1.0
    assert all_one.specificity == 0.0
    assert all_one.accuracy == 0.5


def test_metrics_undefined_class_is_none():
    m = compute_metrics(ConfusionMatrix(tp=0, fp=1, tn=5, fn=0))
    assert m.sensitivity is None and m.specificity == pytest.approx(5 / 6)
    with pytest.raises(DataError):
        compute_metrics(ConfusionMatrix(0, 0, 0, 0))
    with pytest.raises(ValueError):
        ConfusionMatrix.from_predictions(np.zeros(3), np.zeros(4))


# ----------------------------------------------------------------- protocol


def protocol_dataset(seed=11, m=60):
    d, truth = generate(
        SyntheticSpec(
            m=m,
            n=6,
            support=((0, 1.6), (2, -1.2)),
            noise_model="margin",
            flip_prob=0.05,
            seed=seed,
        )
    )
    return d, truth


def test_run_protocol_deterministic_and_consistent():
    d, _ = protocol_dataset()
    split = SplitPlan(repetitions=3, seed=6)
    cv = CVPlan(folds=5, lambda_grid=(1e-4, 1e-2, 1.0), seed=9)
    r1 = run_protocol(d, full_modality(d), 4, split, cv, FAST_CFG)
    r2 = run_protocol(d, full_modality(d), 4, split, cv, FAST_CFG)
    assert r1 == r2
    assert r1.repetitions == 3 and len(r1.per_repetition) == 3
    assert 0.0 <= r1.acc_mean <= 1.0 and r1.acc_sd >= 0.0
    # accuracy decomposes exactly over the two classes of each test split
    for rep in r1.per_repetition:
        _, test_idx = stratified_split(d.labels, split, rep.repetition)
        pos = int(d.labels[test_idx].sum())
        neg = test_idx.size - pos
        decomposed = (rep.sensitivity * pos + rep.specificity * neg) / (pos + neg)
        assert rep.accuracy == pytest.approx(decomposed, abs=1e-12)
        assert rep.chosen_lambda in cv.lambda_grid


def test_run_protocol_plain_classifier_skips_cv():
    d, _ = protocol_dataset(seed=12)
    r = run_protocol(d, full_modality(d), 1, SplitPlan(repetitions=2, seed=1), CVPlan(folds=5), FAST_CFG)
    assert all(rep.chosen_lambda == 0.0 for rep in r.per_repetition)
    assert all(rep.cv_mean_accuracies is None for rep in r.per_repetition)


def test_run_protocol_strong_signal_accuracy():
    d, truth = protocol_dataset(seed=13, m=120)
    r = run_protocol(
        d,
        full_modality(d),
        2,
        SplitPlan(repetitions=4, seed=3),
        CVPlan(folds=5, lambda_grid=(1e-4, 1e-2, 1.0), seed=4),
        FAST_CFG,
    )
    assert r.acc_mean >= truth.bayes_accuracy - 0.15
    assert r.nonconverged == 0


def test_run_protocol_single_repetition_sd_zero():
    d, _ = protocol_dataset(seed=15)
    r = run_protocol(d, full_modality(d), 3, SplitPlan(repetitions=1, seed=8), CVPlan(folds=5), FAST_CFG)
    assert r.acc_sd == 0.0


def test_run_protocol_rejects_unknown_classifier():
    d, _ = protocol_dataset(seed=16)
    with pytest.raises(ValueError):
        run_protocol(d, full_modality(d), 5, SplitPlan(repetitions=1), CVPlan())


def test_run_protocol_never_fits_on_test_rows(monkeypatch):
    d, _ = protocol_dataset(seed=17)
    split = SplitPlan(repetitions=1, seed=44)
    _, test_idx = stratified_split(d.labels, split, 0)
    test_ids = {d.sample_ids[i] for i in test_idx}

    seen_fit, seen_std = [], []
    real_fit, real_path, real_std = solmod.fit, solmod.fit_path, dsmod.fit_standardizer

    def spy_fit(dd, *a, **k):
        seen_fit.extend(dd.sample_ids)
        return real_fit(dd, *a, **k)

    def spy_path(dd, *a, **k):
        seen_fit.extend(dd.sample_ids)
        return real_path(dd, *a, **k)

    def spy_std(dd, *a, **k):
        seen_std.extend(dd.sample_ids)
        return real_std(dd, *a, **k)

    monkeypatch.setattr(solmod, "fit", spy_fit)
    monkeypatch.setattr(solmod, "fit_path", spy_path)
    monkeypatch.setattr(dsmod, "fit_standardizer", spy_std)
    run_protocol(d, full_modality(d), 2, split, CVPlan(folds=5, lambda_grid=(1e-2, 1.0), seed=5), FAST_CFG)
    assert seen_fit and seen_std
    assert test_ids.isdisjoint(seen_fit)
    assert test_ids.isdisjoint(seen_std)


def test_report_csv_row_and_sidecar():
    d, _ = protocol_dataset(seed=18)
    r = run_protocol(
        d, full_modality(d), 2, SplitPlan(repetitions=2, seed=0), CVPlan(folds=5, lambda_grid=(1e-2, 1.0)), FAST_CFG
    )
    cells = r.csv_row().split(",")
    assert len(cells) == len(r.CSV_HEADER.split(","))
    assert cells[0] == "all" and cells[1] == "2"
    assert float(cells[2]) == pytest.approx(r.acc_mean)
    assert cells[8] == str(int(math.floor(r.mean_nonzero + 0.5)))
    side = r.sidecar()
    assert len(side["repetitions"]) == 2
    assert side["modality"] == "all"
    assert {"lambda", "accuracy", "converged"} <= set(side["repetitions"][0])


def test_classifier_kind_map():
    assert CLASSIFIER_KINDS[1] is ObjectiveKind.LOGISTIC_PLAIN
    assert CLASSIFIER_KINDS[2] is ObjectiveKind.LOGISTIC_L1
    assert CLASSIFIER_KINDS[3] is ObjectiveKind.HINGE_PLAIN
    assert CLASSIFIER_KINDS[4] is ObjectiveKind.HINGE_L1


# ------------------------------------------------------------- group stats


def group_dataset(g0, g1):
    col = np.concatenate([g0, g1]).astype(np.float64)
    labels = np.array([0] * len(g0) + [1] * len(g1), dtype=np.int64)
    m = col.shape[0]
    return Dataset(col[:, None], labels, ("v",), tuple(f"s{i}" for i in range(m)))


def test_welch_identical_groups():
    vals = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    r = compare_groups(group_dataset(vals, vals), "v", "welch_t")
    assert r.statistic == 0.0
    assert r.p_value == pytest.approx(1.0)


def test_welch_matches_scipy_and_df():
    g0 = np.array([0.0, 1.0] * 5)
    g1 = np.array([5.0, 6.0] * 5)
    r = compare_groups(group_dataset(g0, g1), "v", "welch_t")
    ref = scipy.stats.ttest_ind(g1, g0, equal_var=False)
    assert r.statistic == pytest.approx(float(ref.statistic), rel=1e-12)
    assert r.p_value == pytest.approx(float(ref.pvalue), rel=1e-12)
    assert r.df == pytest.approx(18.0)  # equal sizes, equal variances


def test_chi_square_independence_zero():
    g = np.array([0.0] * 50 + [1.0] * 50)
    r = compare_groups(group_dataset(g, g), "v", "chi_square")
    assert r.statistic == 0.0
    assert r.p_value == pytest.approx(1.0)
    assert r.df == 1.0


def test_group_comparison_errors():
    flat = np.ones(5)
    with pytest.raises(DataError):
        compare_groups(group_dataset(flat, flat), "v", "welch_t")
    with pytest.raises(DataError):
        compare_groups(group_dataset(flat, flat), "v", "chi_square")  # single value
    rng = make_rng(2)
    many = rng.standard_normal(30)
    with pytest.raises(DataError):
        compare_groups(group_dataset(many, many), "v", "chi_square", max_distinct=10)
    d = group_dataset(np.array([1.0, 2.0]), np.array([3.0, 4.0]))
    with pytest.raises(DataError):
        compare_groups(d, "nope", "welch_t")
    with pytest.raises(ValueError):
        compare_groups(d, "v", "anova")
    with pytest.raises(DataError):
        compare_groups(group_dataset(np.array([1.0]), np.array([2.0, 3.0])), "v", "welch_t")


def test_welch_agrees_with_permutation_oracle():
    rng = make_rng(99)
    g0 = rng.standard_normal(100)
    g1 = rng.standard_normal(100) + 1.0
    d = group_dataset(g0, g1)
    r = compare_groups(d, "v", "welch_t")
    assert abs(r.statistic) > 5.0 and r.p_value < 1e-3

    col = d.features[:, 0]
    obs = abs(g1.mean() - g0.mean())
    hits = 0
    for _ in range(10_000):
        perm = rng.permutation(col)
        hits += abs(perm[100:].mean() - perm[:100].mean()) >= obs
    p_perm = hits / 10_000
    assert (p_perm < 0.01) == (r.p_value < 0.01)
