"""Weight-based feature analysis of fitted sparse models.

Features are ranked by mean absolute standardized weight across a set of
models (typically the per-repetition L1 fits); exact zeros everywhere rank
last, ties break toward the lower original column index. The canonical
accuracy-versus-k curve refits the unpenalized classifier of the same
family on the top-k features through the full holdout protocol; tracing
the penalty path instead is available as a secondary mode.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import dataset as ds
from . import evaluation, solvers
from .dataset import Dataset, ModalitySpec
from .objectives import ObjectiveSpec
from .solvers import LinearModel

__all__ = [
    "FeatureRank",
    "FeatureRanking",
    "AccuracyCurve",
    "rank_features",
    "accuracy_vs_k",
    "lambda_path_points",
    "sparsity_report",
    "write_ranking_csv",
    "write_curve_csv",
    "write_curve_gnuplot",
]


@dataclass(frozen=True)
class FeatureRank:
    name: str
    weight: float           # mean signed weight across models
    abs_weight: float       # mean |weight|, the ranking key
    selection_frequency: float  # fraction of models with a nonzero weight


@dataclass(frozen=True)
class FeatureRanking:
    """Ordered feature ranks plus provenance of the source models."""

    entries: tuple[FeatureRank, ...]
    classifier_kind: str
    lambdas: tuple[float, ...]
    n_models: int

    def top(self, k: int) -> tuple[str, ...]:
        if not 1 <= k <= len(self.entries):
            raise ValueError(f"k must lie in [1, {len(self.entries)}], got {k}")
        return tuple(e.name for e in self.entries[:k])


@dataclass(frozen=True)
class AccuracyCurve:
    """(k, mean accuracy, accuracy sd) triples for k = 1..k_max."""

    classifier: int
    points: tuple[tuple[int, float, float], ...]


def rank_features(models) -> FeatureRanking:
    """Rank a shared feature space by mean |weight| over ``models``.

    All models must agree on feature names. Order: descending mean
    absolute weight, then ascending original column index, which parks
    the everywhere-zero block at the end in stable column order.
    """
    models = list(models)
    if not models:
        raise ValueError("rank_features needs at least one model")
    names = models[0].feature_names
    for m in models[1:]:
        if m.feature_names != names:
            raise ValueError("models disagree on feature names")
    mat = np.vstack([m.weights.weights for m in models])
    mean_abs = np.abs(mat).mean(axis=0)
    mean_signed = mat.mean(axis=0)
    freq = (mat != 0.0).mean(axis=0)
    order = np.lexsort((np.arange(len(names)), -mean_abs))
    entries = tuple(
        FeatureRank(names[j], float(mean_signed[j]), float(mean_abs[j]), float(freq[j]))
        for j in order
    )
    return FeatureRanking(
        entries=entries,
        classifier_kind=models[0].kind,
        lambdas=tuple(m.lam for m in models),
        n_models=len(models),
    )


def accuracy_vs_k(
    d: Dataset,
    ranking: FeatureRanking,
    classifier: int,
    split: evaluation.SplitPlan,
    cfg: solvers.SolverConfig | None = None,
    k_max: int | None = None,
) -> AccuracyCurve:
    """Holdout accuracy of the unpenalized classifier on top-k features.

    classifier must be 1 (logistic) or 3 (SVM). For every k the top-k
    feature *set* is refit, keeping the columns in their original dataset
    order, so the k = N point reproduces run_protocol on the full feature
    set exactly, floats included.
    """
    if classifier not in (1, 3):
        raise ValueError("curves refit the unpenalized classifiers (1 or 3)")
    k_max = k_max if k_max is not None else len(ranking.entries)
    if not 1 <= k_max <= len(ranking.entries):
        raise ValueError(f"k_max must lie in [1, {len(ranking.entries)}]")
    column = {name: i for i, name in enumerate(d.feature_names)}
    cv = evaluation.CVPlan()  # unused by plain classifiers; protocol wants one
    points = []
    for k in range(1, k_max + 1):
        chosen = sorted(ranking.top(k), key=column.__getitem__)
        spec_k = ModalitySpec(f"top{k}", tuple(chosen))
        report = evaluation.run_protocol(d, spec_k, classifier, split, cv, cfg)
        points.append((k, report.acc_mean, report.acc_sd))
    return AccuracyCurve(classifier, tuple(points))


def lambda_path_points(
    d: Dataset,
    classifier: int,
    lambdas,
    split: evaluation.SplitPlan,
    cfg: solvers.SolverConfig | None = None,
):
    """Secondary curve mode: sparsity/accuracy along the penalty path.

    For each lambda, fits the L1 classifier (2 or 4) on every holdout
    repetition and reports (lambda, mean nonzero count, mean accuracy).
    """
    if classifier not in (2, 4):
        raise ValueError("the lambda path applies to the L1 classifiers (2 or 4)")
    kind = evaluation.CLASSIFIER_KINDS[classifier]
    cfg = cfg or solvers.SolverConfig()
    out = []
    for lam in lambdas:
        accs, nnzs = [], []
        for rep in range(split.repetitions):
            train_idx, test_idx = evaluation.stratified_split(d.labels, split, rep)
            d_train = ds.take_rows(d, train_idx)
            d_test = ds.take_rows(d, test_idx)
            params = ds.fit_standardizer(d_train)
            model = solvers.fit(
                ds.apply_standardizer(d_train, params),
                ObjectiveSpec(kind, float(lam)),
                cfg,
                standardization=params,
            )
            accs.append(float(np.mean(solvers.predict(model, d_test) == d_test.labels)))
            nnzs.append(int(np.count_nonzero(model.weights.weights)))
        out.append((float(lam), float(np.mean(nnzs)), float(np.mean(accs))))
    return out


def sparsity_report(m: LinearModel) -> tuple[int, tuple[str, ...]]:
    """Exact-zero census: (nonzero count, names of nonzero features)."""
    w = m.weights.weights
    nz = w != 0.0
    return int(np.count_nonzero(nz)), tuple(
        name for name, keep in zip(m.feature_names, nz) if keep
    )


def write_ranking_csv(ranking: FeatureRanking, path, top: int | None = None) -> None:
    rows = ranking.entries[: top or len(ranking.entries)]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "feature", "mean_abs_weight", "selection_frequency"])
        for i, e in enumerate(rows, start=1):
            writer.writerow([i, e.name, repr(e.abs_weight), repr(e.selection_frequency)])


def write_curve_csv(curve: AccuracyCurve, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "acc_mean", "acc_sd"])
        for k, mean, sd in curve.points:
            writer.writerow([k, repr(mean), repr(sd)])


def write_curve_gnuplot(curve: AccuracyCurve, path) -> None:
    """Two-column whitespace data file (k, mean accuracy)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# k accuracy\n")
        for k, mean, _sd in curve.points:
            fh.write(f"{k} {mean!r}\n")
