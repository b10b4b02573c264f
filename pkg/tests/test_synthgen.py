"""Generator ground-truth contracts and the reference oracles.

The oracle tests here are load-bearing: the rest of the suite treats
oracle_minimize as the source of truth, so its own checks must not lean
on the solvers module (dual-route rule). Cross-checks go through closed
forms, quadrature, or symmetry instead.
"""

import math

import numpy as np
import pytest
import scipy.integrate

from sparsebench import (
    Dataset,
    ObjectiveKind,
    ObjectiveSpec,
    OracleError,
    SolverConfig,
    SyntheticSpec,
    WeightVector,
    apply_standardizer,
    fit,
    fit_standardizer,
    generate,
    hinge_cost,
    lambda_max,
    load_csv,
    logistic_cost,
    make_rng,
    naive_hinge_cost,
    naive_logistic_cost,
    oracle_minimize,
    save_csv,
)


def standardized_random(seed, m=40, n=5):
    rng = make_rng(seed)
    X = rng.standard_normal((m, n))
    y = (rng.random(m) < 0.5).astype(np.int64)
    if y.sum() in (0, m):  # keep both classes present
        y[0] = 1 - y[0]
    d = Dataset(X, y, tuple(f"g{j}" for j in range(n)), tuple(f"s{i}" for i in range(m)))
    return apply_standardizer(d, fit_standardizer(d))


# ---------------------------------------------------------------- generator


def test_margin_noiseless_threshold_rule():
    d, truth = generate(SyntheticSpec(m=100, n=20, support=((0, 2.0),), noise_model="margin"))
    assert np.array_equal(d.labels, (d.features[:, 0] >= 0.0).astype(np.int64))
    assert truth.bayes_accuracy == 1.0
    assert np.array_equal(truth.bayes_labels(d.features), d.labels)

    # nonzero intercept shifts the threshold to -intercept / weight
    d2, truth2 = generate(
        SyntheticSpec(m=100, n=3, support=((0, 2.0),), intercept=0.5, noise_model="margin")
    )
    assert np.array_equal(d2.labels, (d2.features[:, 0] >= -0.25).astype(np.int64))
    assert truth2.bayes_accuracy == 1.0


def test_margin_flip_bayes_accuracy_exact():
    _, truth = generate(
        SyntheticSpec(m=50, n=4, support=((1, 1.0),), noise_model="margin", flip_prob=0.4)
    )
    assert truth.bayes_accuracy == 0.6


def test_same_seed_bit_identical():
    spec = SyntheticSpec(
        m=60, n=8, support=((0, 1.5), (3, -0.8)), noise_model="logistic", seed=91
    )
    d1, t1 = generate(spec)
    d2, t2 = generate(spec)
    assert np.array_equal(d1.features, d2.features)
    assert np.array_equal(d1.labels, d2.labels)
    assert d1.feature_names == d2.feature_names
    assert d1.sample_ids == d2.sample_ids
    assert t1.bayes_accuracy == t2.bayes_accuracy

    d3, _ = generate(
        SyntheticSpec(m=60, n=8, support=((0, 1.5), (3, -0.8)), noise_model="logistic", seed=92)
    )
    assert not np.array_equal(d1.features, d3.features)


def test_margin_label_rate_near_half():
    # balanced threshold: pooled positive rate within 3 binomial sds of 0.5
    total = pos = 0
    for seed in range(20):
        d, _ = generate(
            SyntheticSpec(m=300, n=4, support=((0, 1.0),), noise_model="margin", seed=seed)
        )
        total += d.n_samples
        pos += int(d.labels.sum())
    assert abs(pos / total - 0.5) < 3 * math.sqrt(0.25 / total)


def test_correlated_features_structure():
    d, _ = generate(
        SyntheticSpec(
            m=6000,
            n=5,
            support=((0, 1.0),),
            noise_model="margin",
            feature_correlation=0.6,
            seed=7,
        )
    )
    assert np.allclose(d.features.var(axis=0), 1.0, atol=0.08)
    corr = np.corrcoef(d.features, rowvar=False)
    off = corr[~np.eye(5, dtype=bool)]
    assert abs(off.mean() - 0.6) < 0.05


def test_spec_validation():
    ok = dict(m=10, n=4, support=((0, 1.0),))
    for bad in (
        dict(ok, m=0),
        dict(ok, n=0),
        dict(ok, noise_model="probit"),
        dict(ok, flip_prob=0.5),
        dict(ok, flip_prob=-0.1),
        dict(ok, feature_correlation=1.0),
        dict(ok, feature_correlation=-0.01),
        dict(ok, support=((4, 1.0),)),
        dict(ok, support=((1, 1.0), (1, 2.0))),
        dict(ok, support=((2, 0.0),)),
    ):
        with pytest.raises(ValueError):
            SyntheticSpec(**bad)


def test_generated_round_trip_bit_exact(tmp_path):
    d, _ = generate(
        SyntheticSpec(m=40, n=7, support=((2, 1.1), (5, -0.4)), noise_model="logistic", seed=33)
    )
    path = tmp_path / "gen.csv"
    save_csv(d, path)
    back = load_csv(path, "label", "id")
    assert np.array_equal(back.features, d.features)
    assert np.array_equal(back.labels, d.labels)
    assert back.feature_names == d.feature_names
    assert back.sample_ids == d.sample_ids


def test_truth_bundle_layout_and_decision_rule():
    spec = SyntheticSpec(
        m=4000,
        n=6,
        support=((4, -0.9), (1, 1.3)),
        intercept=0.2,
        noise_model="margin",
        flip_prob=0.15,
        seed=12,
    )
    d, truth = generate(spec)
    assert truth.support == (1, 4)
    expected = np.zeros(6)
    expected[1], expected[4] = 1.3, -0.9
    assert np.array_equal(truth.weights, expected)
    # the bundled rule should hit the Bayes rate against the flipped labels
    agree = float((truth.bayes_labels(d.features) == d.labels).mean())
    assert abs(agree - 0.85) < 3 * math.sqrt(0.15 * 0.85 / spec.m)


def test_logistic_bayes_matches_quadrature():
    # independent route: E[max(p, 1-p)] by adaptive quadrature over the
    # exact score distribution N(intercept, score_var)
    for support, rho, intercept in (
        (((0, 1.3), (2, -0.7)), 0.0, 0.3),
        (((0, 0.8), (1, 0.6)), 0.4, 0.0),
    ):
        w = [v for _, v in support]
        var = (1 - rho) * sum(v * v for v in w) + rho * sum(w) ** 2
        sd = math.sqrt(var)

        def integrand(s):
            p = 1.0 / (1.0 + math.exp(-s))
            dens = math.exp(-0.5 * ((s - intercept) / sd) ** 2) / (sd * math.sqrt(2 * math.pi))
            return max(p, 1.0 - p) * dens

        expected, _ = scipy.integrate.quad(integrand, intercept - 12 * sd, intercept + 12 * sd)
        _, truth = generate(
            SyntheticSpec(
                m=10,
                n=3,
                support=support,
                intercept=intercept,
                noise_model="logistic",
                feature_correlation=rho,
            )
        )
        assert truth.bayes_accuracy == pytest.approx(expected, abs=2e-3)


def test_logistic_bayes_monotone_in_signal_and_seed_free():
    def bayes(scale, seed=0):
        _, truth = generate(
            SyntheticSpec(m=10, n=2, support=((0, scale),), noise_model="logistic", seed=seed)
        )
        return truth.bayes_accuracy

    assert bayes(5.0) > bayes(1.0) > bayes(0.2) > 0.5
    assert bayes(1.0, seed=0) == bayes(1.0, seed=777)  # estimate ignores the data seed


# ------------------------------------------------------------------ oracles


def test_oracle_symmetric_intercept_zero():
    X = np.array([[1.0], [-1.0]] * 10)
    y = np.array([1, 0] * 10, dtype=np.int64)
    d = Dataset(X, y, ("f",), tuple(f"s{i}" for i in range(20)))
    for kind in (ObjectiveKind.LOGISTIC_L1, ObjectiveKind.HINGE_L1):
        _, w = oracle_minimize(ObjectiveSpec(kind, 0.05), d)
        assert abs(w.intercept) < 1e-6


def test_oracle_null_model_at_and_above_lambda_max():
    d = standardized_random(5, m=50, n=6)
    lmax = lambda_max(d)
    pbar = float(d.labels.mean())
    entropy = -(pbar * math.log(pbar) + (1 - pbar) * math.log(1 - pbar))
    for lam, wtol in ((lmax, 1e-5), (1.5 * lmax, 1e-7)):
        val, w = oracle_minimize(ObjectiveSpec(ObjectiveKind.LOGISTIC_L1, lam), d)
        assert float(np.abs(w.weights).max()) <= wtol
        # with zero weights the best mean cross-entropy is the label entropy
        assert val == pytest.approx(entropy, abs=1e-8)


def test_oracle_desk_scale_guard():
    big_m = Dataset(
        np.zeros((201, 2)),
        np.array([0, 1] * 100 + [0], dtype=np.int64),
        ("a", "b"),
        tuple(f"s{i}" for i in range(201)),
    )
    with pytest.raises(OracleError):
        oracle_minimize(ObjectiveSpec(ObjectiveKind.LOGISTIC_L1, 0.1), big_m)
    wide = Dataset(
        np.zeros((10, 9)),
        np.array([0, 1] * 5, dtype=np.int64),
        tuple(f"g{j}" for j in range(9)),
        tuple(f"s{i}" for i in range(10)),
    )
    with pytest.raises(OracleError):
        oracle_minimize(ObjectiveSpec(ObjectiveKind.HINGE_L1, 0.1), wide)


def test_naive_costs_agree_with_objectives_module():
    # per-sample fsum accumulation vs the vectorized implementations
    rng = make_rng(88)
    d = standardized_random(88, m=13, n=4)
    w = WeightVector(0.3, rng.standard_normal(4))
    assert naive_logistic_cost(w, d, 0.3) == pytest.approx(logistic_cost(w, d, 0.3), abs=1e-12)
    assert naive_hinge_cost(w, d, 0.3) == pytest.approx(hinge_cost(w, d, 0.3), abs=1e-12)


def test_oracle_and_solver_decisions_agree():
    cfg = SolverConfig(max_iterations=50_000, tolerance=1e-11, hinge_smoothing=1e-8)
    for seed in (21, 22, 23):
        d = standardized_random(seed, m=50, n=5)
        for kind in (ObjectiveKind.LOGISTIC_L1, ObjectiveKind.HINGE_L1):
            obj = ObjectiveSpec(kind, 0.05)
            model = fit(d, obj, cfg)
            _, w = oracle_minimize(obj, d)
            oracle_pred = (w.intercept + d.features @ w.weights >= 0.0).astype(np.int64)
            solver_scores = model.weights.intercept + d.features @ model.weights.weights
            solver_pred = (solver_scores >= 0.0).astype(np.int64)
            assert np.array_equal(solver_pred, oracle_pred)
