"""Experimental protocol: repeated stratified holdout, cross-validated
penalty selection, and the classification/group statistics.

Classifier ids follow the 1..4 convention: 1 = logistic, 2 = logistic+L1,
3 = SVM, 4 = SVM+L1. For the L1 classifiers the penalty is re-selected in
every holdout repetition by stratified k-fold CV over a fixed grid, with
ties broken toward the larger (sparser) value. Standardization is refit
on every training portion, holdout and fold alike; test rows never reach
a fitting routine.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np
import scipy.stats

from . import dataset as ds
from . import solvers
from .dataset import DataError, Dataset, ModalitySpec
from .objectives import ObjectiveKind, ObjectiveSpec
from .rng import make_rng

__all__ = [
    "PAPER_LAMBDA_GRID",
    "CLASSIFIER_KINDS",
    "SplitPlan",
    "CVPlan",
    "CVTable",
    "ConfusionMatrix",
    "Metrics",
    "RepetitionResult",
    "EvalReport",
    "GroupComparison",
    "stratified_split",
    "kfold_indices",
    "select_lambda",
    "compute_metrics",
    "run_protocol",
    "compare_groups",
]

PAPER_LAMBDA_GRID: tuple[float, ...] = (
    1e-15, 1e-10, 1e-8, 1e-4, 1e-3, 1e-2, 1.0, 5.0, 10.0, 20.0,
)

CLASSIFIER_KINDS: dict[int, ObjectiveKind] = {
    1: ObjectiveKind.LOGISTIC_PLAIN,
    2: ObjectiveKind.LOGISTIC_L1,
    3: ObjectiveKind.HINGE_PLAIN,
    4: ObjectiveKind.HINGE_L1,
}


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class SplitPlan:
    train_fraction: float = 0.9
    repetitions: int = 20
    stratified: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")


@dataclass(frozen=True)
class CVPlan:
    folds: int = 10
    lambda_grid: tuple[float, ...] = PAPER_LAMBDA_GRID
    seed: int = 0

    def __post_init__(self):
        grid = tuple(float(v) for v in self.lambda_grid)
        if len(grid) < 1 or any(v <= 0 for v in grid):
            raise ValueError("lambda_grid must be non-empty and positive")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("lambda_grid must be strictly increasing")
        if self.folds < 2:
            raise ValueError("folds must be >= 2")
        object.__setattr__(self, "lambda_grid", grid)


def stratified_split(labels, plan: SplitPlan, repetition: int):
    """Train/test index arrays for one repetition.

    Per class, round(count * train_fraction) samples go to train (nearest,
    ties up). The assignment is a pure function of (plan.seed, repetition).
    """
    if not 0 <= repetition < plan.repetitions:
        raise ValueError(f"repetition {repetition} outside [0, {plan.repetitions})")
    labels = np.asarray(labels)
    m = labels.shape[0]
    rng = make_rng(plan.seed, repetition)
    train_parts, test_parts = [], []
    if plan.stratified:
        for cls in (0, 1):
            idx = np.flatnonzero(labels == cls)
            if idx.size < 2:
                raise DataError(f"class {cls} has {idx.size} members; need >= 2 to split")
            perm = rng.permutation(idx)
            n_train = _round_half_up(idx.size * plan.train_fraction)
            train_parts.append(perm[:n_train])
            test_parts.append(perm[n_train:])
    else:
        perm = rng.permutation(m)
        n_train = _round_half_up(m * plan.train_fraction)
        train_parts.append(perm[:n_train])
        test_parts.append(perm[n_train:])
    train = np.sort(np.concatenate(train_parts))
    test = np.sort(np.concatenate(test_parts))
    return train, test


def kfold_indices(labels, plan: CVPlan) -> list[np.ndarray]:
    """Validation index arrays for k folds, stratified by label.

    Remainder samples rotate across folds so the fold sizes differ by at
    most one overall. Deterministic given plan.seed.
    """
    labels = np.asarray(labels)
    m = labels.shape[0]
    k = plan.folds
    if k > m:
        raise DataError(f"cannot make {k} folds from {m} samples")
    rng = make_rng(plan.seed)
    folds: list[list[np.ndarray]] = [[] for _ in range(k)]
    offset = 0
    for cls in (0, 1):
        idx = np.flatnonzero(labels == cls)
        perm = rng.permutation(idx)
        base, rem = divmod(idx.size, k)
        sizes = np.full(k, base)
        for r in range(rem):
            sizes[(offset + r) % k] += 1
        offset += rem
        stop = np.cumsum(sizes)
        start = stop - sizes
        for f in range(k):
            folds[f].append(perm[start[f] : stop[f]])
    return [np.sort(np.concatenate(parts)) for parts in folds]


@dataclass(frozen=True)
class CVTable:
    """Per-penalty CV accuracies: one row per lambda, one column per fold."""

    lambdas: tuple[float, ...]
    fold_accuracies: np.ndarray

    @property
    def mean_accuracies(self) -> np.ndarray:
        return self.fold_accuracies.mean(axis=1)


def select_lambda(
    d_train: Dataset,
    kind: ObjectiveKind,
    plan: CVPlan,
    cfg: solvers.SolverConfig | None = None,
) -> tuple[float, CVTable]:
    """Penalty with the best mean CV accuracy; ties go to the larger value.

    Each fold refits standardization on its own training portion, fits the
    whole grid warm-started along the descending path, and scores the raw
    held-out fold through the stored standardization.
    """
    if not kind.penalized:
        raise ValueError(f"lambda selection applies to L1 kinds, not {kind.value}")
    cfg = cfg or solvers.SolverConfig()
    grid = plan.lambda_grid
    folds = kfold_indices(d_train.labels, plan)
    all_idx = np.arange(d_train.n_samples)
    accs = np.empty((len(grid), len(folds)))
    for f, val_idx in enumerate(folds):
        fit_idx = np.setdiff1d(all_idx, val_idx)
        d_fit = ds.take_rows(d_train, fit_idx)
        d_val = ds.take_rows(d_train, val_idx)
        params = ds.fit_standardizer(d_fit)
        d_fit_std = ds.apply_standardizer(d_fit, params)
        models = solvers.fit_path(d_fit_std, kind, grid, cfg, standardization=params)
        for li, model in enumerate(models):
            pred = solvers.predict(model, d_val)
            accs[li, f] = float(np.mean(pred == d_val.labels))
    means = accs.mean(axis=1)
    best_i = 0
    for i in range(len(grid)):
        if means[i] >= means[best_i]:
            best_i = i  # >= : ties resolve to the larger lambda
    return grid[best_i], CVTable(grid, accs)


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with label 1 as the positive class."""

    tp: int
    fp: int
    tn: int
    fn: int

    @classmethod
    def from_predictions(cls, y_true, y_pred) -> "ConfusionMatrix":
        y_true = np.asarray(y_true)
        y_pred = np.asarray(y_pred)
        if y_true.shape != y_pred.shape:
            raise ValueError("label/prediction shapes differ")
        return cls(
            tp=int(np.sum((y_true == 1) & (y_pred == 1))),
            fp=int(np.sum((y_true == 0) & (y_pred == 1))),
            tn=int(np.sum((y_true == 0) & (y_pred == 0))),
            fn=int(np.sum((y_true == 1) & (y_pred == 0))),
        )

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class Metrics:
    """Accuracy plus the per-class rates; a rate whose class is absent
    from the test set is None and excluded from aggregation."""

    accuracy: float
    sensitivity: float | None
    specificity: float | None


def compute_metrics(cm: ConfusionMatrix) -> Metrics:
    if cm.total == 0:
        raise DataError("empty confusion matrix")
    acc = (cm.tp + cm.tn) / cm.total
    pos, neg = cm.tp + cm.fn, cm.tn + cm.fp
    sens = cm.tp / pos if pos else None
    spec = cm.tn / neg if neg else None
    if sens is not None and spec is not None:
        # weighted identity: accuracy decomposes over the two classes
        assert abs(acc - (sens * pos + spec * neg) / cm.total) < 1e-12
    return Metrics(acc, sens, spec)


@dataclass(frozen=True)
class RepetitionResult:
    repetition: int
    chosen_lambda: float
    accuracy: float
    sensitivity: float | None
    specificity: float | None
    nonzero_count: int
    converged: bool
    cv_mean_accuracies: tuple[float, ...] | None = None


@dataclass(frozen=True)
class EvalReport:
    """Aggregated protocol outcome for one modality x classifier cell."""

    modality: str
    classifier: int
    n_features: int
    repetitions: int
    acc_mean: float
    acc_sd: float
    sens_mean: float | None
    sens_sd: float | None
    spec_mean: float | None
    spec_sd: float | None
    mean_nonzero: float
    chosen_lambdas: tuple[float, ...]
    undefined_sensitivity: int
    undefined_specificity: int
    nonconverged: int
    per_repetition: tuple[RepetitionResult, ...]
    models: tuple[solvers.LinearModel, ...] | None = None

    CSV_HEADER = (
        "modality,classifier,acc_mean,acc_sd,sens_mean,sens_sd,"
        "spec_mean,spec_sd,n_features"
    )

    def csv_row(self) -> str:
        """Table-6-style row; n_features is the rounded mean nonzero count."""
        def fmt(v):
            return "" if v is None else repr(float(v))

        cells = [
            self.modality,
            str(self.classifier),
            fmt(self.acc_mean),
            fmt(self.acc_sd),
            fmt(self.sens_mean),
            fmt(self.sens_sd),
            fmt(self.spec_mean),
            fmt(self.spec_sd),
            str(_round_half_up(self.mean_nonzero)),
        ]
        return ",".join(cells)

    def sidecar(self) -> dict:
        """Per-repetition detail for the JSON sidecar."""
        return {
            "modality": self.modality,
            "classifier": self.classifier,
            "n_features": self.n_features,
            "mean_nonzero": self.mean_nonzero,
            "undefined_sensitivity": self.undefined_sensitivity,
            "undefined_specificity": self.undefined_specificity,
            "nonconverged": self.nonconverged,
            "repetitions": [
                {
                    "repetition": r.repetition,
                    "lambda": r.chosen_lambda,
                    "accuracy": r.accuracy,
                    "sensitivity": r.sensitivity,
                    "specificity": r.specificity,
                    "nonzero_count": r.nonzero_count,
                    "converged": r.converged,
                }
                for r in self.per_repetition
            ],
        }


def _mean_sd(values: list[float]) -> tuple[float | None, float | None]:
    if not values:
        return None, None
    mean = float(np.mean(values))
    sd = 0.0 if len(values) == 1 else float(np.std(values, ddof=1))
    return mean, sd


def run_protocol(
    d: Dataset,
    modality: ModalitySpec,
    classifier: int,
    split: SplitPlan,
    cv: CVPlan,
    cfg: solvers.SolverConfig | None = None,
    *,
    keep_models: bool = False,
) -> EvalReport:
    """Repeated stratified holdout for one modality x classifier cell.

    L1 classifiers re-select their penalty per repetition via CV on the
    training split (fold seed = cv.seed + repetition). Identical inputs
    give identical reports.
    """
    if classifier not in CLASSIFIER_KINDS:
        raise ValueError(f"classifier must be 1..4, got {classifier}")
    kind = CLASSIFIER_KINDS[classifier]
    cfg = cfg or solvers.SolverConfig()
    d_mod = ds.assemble_modality(d, modality)

    records = []
    models = []
    for rep in range(split.repetitions):
        train_idx, test_idx = stratified_split(d_mod.labels, split, rep)
        d_train = ds.take_rows(d_mod, train_idx)
        d_test = ds.take_rows(d_mod, test_idx)
        cv_means = None
        if kind.penalized:
            rep_plan = dataclasses.replace(cv, seed=cv.seed + rep)
            lam, table = select_lambda(d_train, kind, rep_plan, cfg)
            cv_means = tuple(float(v) for v in table.mean_accuracies)
        else:
            lam = 0.0
        spec = ObjectiveSpec(kind, lam)
        params = ds.fit_standardizer(d_train)
        d_train_std = ds.apply_standardizer(d_train, params)
        model = solvers.fit(d_train_std, spec, cfg, standardization=params, feature_names=d_mod.feature_names)
        pred = solvers.predict(model, d_test)
        metrics = compute_metrics(ConfusionMatrix.from_predictions(d_test.labels, pred))
        records.append(
            RepetitionResult(
                repetition=rep,
                chosen_lambda=lam,
                accuracy=metrics.accuracy,
                sensitivity=metrics.sensitivity,
                specificity=metrics.specificity,
                nonzero_count=int(np.count_nonzero(model.weights.weights)),
                converged=model.diagnostics.converged,
                cv_mean_accuracies=cv_means,
            )
        )
        if keep_models:
            models.append(model)

    acc_mean, acc_sd = _mean_sd([r.accuracy for r in records])
    sens_vals = [r.sensitivity for r in records if r.sensitivity is not None]
    spec_vals = [r.specificity for r in records if r.specificity is not None]
    sens_mean, sens_sd = _mean_sd(sens_vals)
    spec_mean, spec_sd = _mean_sd(spec_vals)
    return EvalReport(
        modality=modality.name,
        classifier=classifier,
        n_features=d_mod.n_features,
        repetitions=split.repetitions,
        acc_mean=acc_mean,
        acc_sd=acc_sd,
        sens_mean=sens_mean,
        sens_sd=sens_sd,
        spec_mean=spec_mean,
        spec_sd=spec_sd,
        mean_nonzero=float(np.mean([r.nonzero_count for r in records])),
        chosen_lambdas=tuple(r.chosen_lambda for r in records),
        undefined_sensitivity=len(records) - len(sens_vals),
        undefined_specificity=len(records) - len(spec_vals),
        nonconverged=sum(1 for r in records if not r.converged),
        per_repetition=tuple(records),
        models=tuple(models) if keep_models else None,
    )


@dataclass(frozen=True)
class GroupComparison:
    feature: str
    kind: str
    statistic: float
    p_value: float
    df: float


def compare_groups(d: Dataset, feature_name: str, kind: str, max_distinct: int = 10) -> GroupComparison:
    """Two-sided label-group comparison of one feature.

    kind "welch_t": Welch two-sample t with Welch-Satterthwaite degrees of
    freedom. kind "chi_square": 2 x k contingency test over the feature's
    distinct values (at most ``max_distinct`` of them).
    """
    if feature_name not in d.feature_names:
        raise DataError(f"unknown feature {feature_name!r}")
    col = d.features[:, d.feature_names.index(feature_name)]
    g0 = col[d.labels == 0]
    g1 = col[d.labels == 1]
    if g0.size < 2 or g1.size < 2:
        raise DataError("each group needs at least 2 samples")

    if kind == "welch_t":
        v0 = float(np.var(g0, ddof=1))
        v1 = float(np.var(g1, ddof=1))
        if v0 == 0.0 and v1 == 0.0:
            raise DataError(f"{feature_name!r}: zero variance in both groups, t undefined")
        se0, se1 = v0 / g0.size, v1 / g1.size
        stat = (float(g1.mean()) - float(g0.mean())) / math.sqrt(se0 + se1)
        df = (se0 + se1) ** 2 / (se0**2 / (g0.size - 1) + se1**2 / (g1.size - 1))
        p = 2.0 * float(scipy.stats.t.sf(abs(stat), df))
        return GroupComparison(feature_name, kind, stat, p, df)

    if kind == "chi_square":
        values = np.unique(col)
        if values.size > max_distinct:
            raise DataError(
                f"{feature_name!r}: {values.size} distinct values exceed the "
                f"chi-square limit of {max_distinct}"
            )
        if values.size < 2:
            raise DataError(f"{feature_name!r}: a single distinct value, chi-square undefined")
        observed = np.array(
            [[np.sum(g == v) for v in values] for g in (g0, g1)], dtype=np.float64
        )
        row = observed.sum(axis=1, keepdims=True)
        colsum = observed.sum(axis=0, keepdims=True)
        expected = row * colsum / observed.sum()
        if np.any(expected == 0.0):
            raise DataError(f"{feature_name!r}: expected count of zero in a contingency cell")
        stat = float(((observed - expected) ** 2 / expected).sum())
        dof = values.size - 1
        p = float(scipy.stats.chi2.sf(stat, dof))
        return GroupComparison(feature_name, kind, stat, p, float(dof))

    raise ValueError(f"kind must be 'welch_t' or 'chi_square', got {kind!r}")
