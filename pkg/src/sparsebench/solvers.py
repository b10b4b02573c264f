"""First-order solvers for the four objective kinds.

Plain kinds run gradient descent with backtracking line search; L1 kinds
run proximal gradient (ISTA-style), where each step soft-thresholds the
penalized coordinates and leaves the intercept free. Both share one loop:
the proximal map of a zero penalty is the identity.

The hinge sum is optimized through a smoothed surrogate (quadratic on
margins within [1-delta, 1+delta]); reported objectives are always the
true hinge. When cfg.hinge_smoothing is below 1e-3 the solver anneals
delta downward in decade steps (warm-started), which is what makes the
true-hinge objective approach the exact minimum instead of stalling
~delta/4 per on-margin sample above it.

Stationarity of an L1 fit is certified by the soft-threshold optimality
conditions: |g_j + lam * sign(w_j)| small on the support and |g_j| <= lam
plus slack elsewhere, with g the gradient of the smooth part.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

import numpy as np

from .dataset import DataError, Dataset, StandardizationParams, apply_standardizer
from .objectives import (
    ObjectiveKind,
    ObjectiveSpec,
    WeightVector,
    _huber_loss_from_margins,
    _sigmoid,
    PROB_CLAMP,
    soft_threshold,
)

__all__ = [
    "SolverConfig",
    "SolverDiagnostics",
    "LinearModel",
    "SolverError",
    "fit",
    "fit_path",
    "lambda_max",
    "predict",
    "decision_values",
    "predict_proba",
    "kkt_violation",
    "save_model",
    "load_model",
]

_STEP_FLOOR = 1e-18


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    """Iteration budget, stopping rule, and line-search parameters.

    tolerance is a relative objective-decrease threshold; L1 fits must in
    addition drive the stationarity residual below kkt_tolerance before
    they count as converged. hinge_smoothing is the final surrogate delta
    for hinge kinds.
    """

    max_iterations: int = 10_000
    tolerance: float = 1e-7
    initial_weights: WeightVector | None = None
    step_initial: float = 1.0
    step_shrink: float = 0.5
    sufficient_decrease: float = 1e-4
    kkt_tolerance: float = 1e-5
    hinge_smoothing: float = 1e-3
    keep_history: bool = False

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not (0 < self.step_shrink < 1):
            raise ValueError("step_shrink must lie in (0, 1)")
        if self.tolerance < 0 or self.step_initial <= 0 or self.hinge_smoothing <= 0:
            raise ValueError("tolerance, step_initial, hinge_smoothing must be positive")


@dataclass(frozen=True)
class SolverDiagnostics:
    iterations: int
    objective: float
    converged: bool
    grad_inf_norm: float
    kkt_violation: float | None
    train_accuracy: float
    hinge_smoothing: float | None = None
    objective_history: tuple[float, ...] | None = None


@dataclass(frozen=True)
class LinearModel:
    """Fitted linear classifier in standardized feature space.

    kind is "LR" or "SVM". standardization holds the training-split
    location/scale; predict applies it to raw inputs, so the model is
    self-contained.
    """

    kind: str
    lam: float
    weights: WeightVector
    standardization: StandardizationParams
    feature_names: tuple[str, ...]
    diagnostics: SolverDiagnostics

    def __post_init__(self):
        if self.kind not in ("LR", "SVM"):
            raise ValueError(f"kind must be 'LR' or 'SVM', got {self.kind!r}")
        if len(self.feature_names) != self.weights.weights.shape[0]:
            raise ValueError("feature_names length does not match weights")
        object.__setattr__(self, "feature_names", tuple(self.feature_names))


def _identity_standardization(n: int) -> StandardizationParams:
    return StandardizationParams(np.zeros(n), np.ones(n))


def _penalty_violation(g_w: np.ndarray, w: np.ndarray, lam: float) -> float:
    """Max deviation from the L1 stationarity conditions over the weights."""
    on = w != 0.0
    viol = 0.0
    if np.any(on):
        viol = float(np.max(np.abs(g_w[on] + lam * np.sign(w[on]))))
    if np.any(~on):
        viol = max(viol, float(np.max(np.maximum(np.abs(g_w[~on]) - lam, 0.0))))
    return viol


# margins this close to the kink count as "at the kink" for certification,
# even when the smoothing zone is narrower; keeps the certificate stable
# under float rounding of near-active margins
_KINK_PAD = 1e-6

# improvements per convergence-test window (see fit)
_WINDOW = 10


def _hinge_interval_violation(
    X: np.ndarray,
    t_signed: np.ndarray,
    margins: np.ndarray,
    w: np.ndarray,
    lam: float,
    delta: float,
) -> float:
    """Stationarity residual of the true hinge objective, per coordinate.

    Margins at the kink carry the subgradient interval [-1, 0]; the
    residual of a coordinate is the distance between the attainable
    gradient interval and the set its KKT condition demands, and the
    certificate is the worst coordinate (intercept included).
    """
    width = max(delta, _KINK_PAD)
    below = margins < 1.0 - width
    zone = ~below & (margins <= 1.0 + width)
    u = t_signed[:, None] * np.hstack([np.ones((X.shape[0], 1)), X])
    base = -u[below].sum(axis=0)
    uz = -u[zone]
    lo = base + np.minimum(uz, 0.0).sum(axis=0)
    hi = base + np.maximum(uz, 0.0).sum(axis=0)
    # intercept: zero must be attainable
    viol = max(0.0, lo[0], -hi[0])
    target_lo = np.where(w != 0.0, -lam * np.sign(w), -lam)
    target_hi = np.where(w != 0.0, -lam * np.sign(w), lam)
    per = np.maximum(0.0, np.maximum(lo[1:] - target_hi, target_lo - hi[1:]))
    if per.size:
        viol = max(viol, float(per.max()))
    return float(viol)


def kkt_violation(model: LinearModel, d_std: Dataset) -> float:
    """Stationarity residual of an L1 model on its (standardized) training data.

    Logistic models check the exact smooth gradient; hinge models check
    the true-hinge subgradient intervals at the smoothing width they were
    solved with (see design notes in fit).
    """
    w = model.weights
    X, y = d_std.features, d_std.labels
    if model.kind == "LR":
        g0, gw = _logistic_grad(X, y, w.intercept, w.weights)
        return max(abs(g0), _penalty_violation(gw, w.weights, model.lam))
    delta = model.diagnostics.hinge_smoothing or 1e-3
    t_signed = 2.0 * y.astype(np.float64) - 1.0
    margins = t_signed * (w.intercept + X @ w.weights)
    return _hinge_interval_violation(X, t_signed, margins, w.weights, model.lam, delta)


def lambda_max(d: Dataset) -> float:
    """Smallest penalty that zeroes every weight of the L1 logistic fit.

    With the intercept at its null-model optimum the smooth gradient of
    weight j is -(1/M) sum_i x_ij (y_i - ybar); the all-zeros vector is
    stationary exactly when the penalty dominates each coordinate.
    """
    if not (np.any(d.labels == 0) and np.any(d.labels == 1)):
        raise DataError("lambda_max requires both classes")
    y = d.labels.astype(np.float64)
    r = y - y.mean()
    return float(np.max(np.abs(d.features.T @ r)) / d.n_samples)


def _logistic_value(X, y, b0, w, lam):
    h = _sigmoid(b0 + X @ w)
    h = np.clip(h, PROB_CLAMP, 1.0 - PROB_CLAMP)
    loss = float(np.mean(-y * np.log(h) - (1.0 - y) * np.log(1.0 - h)))
    return loss + lam * float(np.abs(w).sum())


def _logistic_grad(X, y, b0, w):
    r = _sigmoid(b0 + X @ w) - y
    m = X.shape[0]
    return float(r.sum() / m), X.T @ r / m


def _hinge_margins(X, t, b0, w):
    return t * (b0 + X @ w)


def _hinge_grad(X, y, b0, w, delta):
    t = 2.0 * np.asarray(y, dtype=np.float64) - 1.0
    margins = _hinge_margins(X, t, b0, w)
    dloss = np.zeros_like(margins)
    lin = margins <= 1.0 - delta
    quad = ~lin & (margins < 1.0 + delta)
    dloss[lin] = -1.0
    dloss[quad] = -(1.0 + delta - margins[quad]) / (2.0 * delta)
    coeff = dloss * t
    return float(coeff.sum()), X.T @ coeff


def _true_hinge_value(X, t, b0, w, lam):
    margins = _hinge_margins(X, t, b0, w)
    loss = float(np.maximum(0.0, 1.0 - margins).sum())
    return loss + lam * float(np.abs(w).sum())


def _hinge_stages(final_delta: float) -> list[float]:
    # anneal from the 1e-3 default down to the requested delta; a gentle
    # ratio keeps each new quadratic zone within reach of the warm start
    # (big jumps leave the iterate in flat territory, where proximal steps
    # oscillate around the shrunken zone); single stage when no extra
    # precision was asked for
    stages = [1e-3]
    while stages[-1] > final_delta * 1.0000001:
        stages.append(max(final_delta, stages[-1] * 0.25))
    return stages


def fit(
    d: Dataset,
    obj: ObjectiveSpec,
    cfg: SolverConfig | None = None,
    *,
    standardization: StandardizationParams | None = None,
    feature_names: tuple[str, ...] | None = None,
) -> LinearModel:
    """Minimize ``obj`` over ``d`` (expected already standardized).

    ``standardization`` is stored in the returned model for later raw-input
    prediction; identity scaling is assumed when omitted. Non-convergence
    within the iteration budget is reported through diagnostics.converged,
    never an exception.
    """
    cfg = cfg or SolverConfig()
    if not (np.any(d.labels == 0) and np.any(d.labels == 1)):
        raise DataError("training requires at least one sample of each class")
    X = d.features
    y = d.labels.astype(np.float64)
    n = d.n_features
    lam = obj.lam
    logistic = obj.kind.is_logistic

    w0 = cfg.initial_weights or WeightVector.zeros(n)
    if w0.weights.shape[0] != n:
        raise ValueError("initial_weights length does not match feature count")
    b0 = w0.intercept
    w = w0.weights.copy()

    t_signed = 2.0 * y - 1.0
    penalty = lambda v: lam * float(np.abs(v).sum()) if lam > 0.0 else 0.0
    if logistic:
        stages = [None]

        def loss_at(scores, _delta):
            h = np.clip(_sigmoid(scores), PROB_CLAMP, 1.0 - PROB_CLAMP)
            return float(np.mean(-y * np.log(h) - (1.0 - y) * np.log(1.0 - h)))

        def grad_at(scores, _delta):
            r = _sigmoid(scores) - y
            m = X.shape[0]
            return float(r.sum() / m), X.T @ r / m

    else:
        stages = _hinge_stages(cfg.hinge_smoothing)

        def loss_at(scores, delta):
            return _huber_loss_from_margins(t_signed * scores, delta)

        def grad_at(scores, delta):
            margins = t_signed * scores
            dloss = np.zeros_like(margins)
            lin = margins <= 1.0 - delta
            quad = ~lin & (margins < 1.0 + delta)
            dloss[lin] = -1.0
            dloss[quad] = -(1.0 + delta - margins[quad]) / (2.0 * delta)
            coeff = dloss * t_signed
            return float(coeff.sum()), X.T @ coeff

    iterations = 0
    converged = False
    history: list[float] = []
    step = cfg.step_initial
    scores = b0 + X @ w
    kkt_val = None  # certificate residual at the current iterate, cached

    def current_kkt(delta) -> float:
        nonlocal kkt_val
        if kkt_val is None:
            if logistic:
                g0, gw = grad_at(scores, delta)
                kkt_val = max(abs(g0), _penalty_violation(gw, w, lam))
            else:
                kkt_val = _hinge_interval_violation(
                    X, t_signed, t_signed * scores, w, lam, delta
                )
        return kkt_val

    def stationary(delta) -> bool:
        if lam == 0.0:
            return True  # smooth: no further descent possible is good enough
        return current_kkt(delta) <= cfg.kkt_tolerance

    # Nesterov momentum over the proximal steps, with a monotone anchor
    # (the recorded iterate only ever improves) and restart on any
    # non-improving trial; each continuation stage restarts momentum.
    for si, delta in enumerate(stages):
        final_stage = si == len(stages) - 1
        loss = loss_at(scores, delta)
        total = loss + penalty(w)
        kkt_val = None
        if cfg.keep_history:
            history.append(total)
        # a fresh trial step per stage: the previous stage may have ground
        # its step down to the float floor while polishing
        step = cfg.step_initial
        # extrapolation state: previous prox point and its scores
        tk = 1.0
        b0_z, w_z, scores_z = b0, w, scores
        y_is_x = True
        b0_y, w_y, scores_y, loss_y = b0, w, scores, loss
        stage_done = False
        stuck = 0
        # tolerance is judged over a window of improvements so that the
        # slow phase of a momentum ripple cannot fake convergence
        win_count = 0
        win_total = total
        while not stage_done and iterations < cfg.max_iterations:
            iterations += 1
            g0_y, gw_y = grad_at(scores_y, delta)
            accepted = False
            trial = step
            while trial >= _STEP_FLOOR:
                b0_c = b0_y - trial * g0_y
                if lam > 0.0:
                    w_c = soft_threshold(w_y - trial * gw_y, trial * lam)
                else:
                    w_c = w_y - trial * gw_y
                diff_sq = (b0_c - b0_y) ** 2 + float(np.sum((w_c - w_y) ** 2))
                if diff_sq == 0.0:
                    break  # proximal fixed point at this step size
                scores_c = b0_c + X @ w_c
                loss_c = loss_at(scores_c, delta)
                # quadratic upper-bound test keeps the step at the local
                # curvature scale (rejects long jumps across hinge kinks);
                # for convex losses it implies the sufficient-decrease
                # condition, which we still require explicitly
                model = loss_y + g0_y * (b0_c - b0_y) + float(gw_y @ (w_c - w_y))
                quad_ok = loss_c <= model + diff_sq / (2.0 * trial)
                suff_ok = (
                    loss_c + penalty(w_c)
                    <= loss_y + penalty(w_y)
                    - cfg.sufficient_decrease * diff_sq / trial
                )
                if quad_ok and suff_ok:
                    accepted = True
                    break
                trial *= cfg.step_shrink
            if not accepted:
                if y_is_x:
                    # no progress from the iterate itself: numerically
                    # stationary at this stage
                    stage_done = True
                    converged = final_stage and stationary(delta)
                    break
                # extrapolated point dead-ends: restart momentum from x
                tk = 1.0
                b0_z, w_z, scores_z = b0, w, scores
                y_is_x = True
                b0_y, w_y, scores_y, loss_y = b0, w, scores, loss
                continue
            step = min(trial * 2.0, 1e8)
            total_c = loss_c + penalty(w_c)
            tk_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tk * tk))
            if total_c <= total:
                # monotone anchor moves to the new prox point
                b0, w, scores, loss, total = b0_c, w_c, scores_c, loss_c, total_c
                kkt_val = None
                stuck = 0
                if cfg.keep_history:
                    history.append(total)
                win_count += 1
                if win_count >= _WINDOW:
                    rel_dec = (win_total - total) <= cfg.tolerance * max(
                        1.0, abs(total)
                    )
                    win_count = 0
                    win_total = total
                    if rel_dec:
                        if not final_stage:
                            stage_done = True
                            break
                        if stationary(delta):
                            stage_done = True
                            converged = True
                            break
                # extrapolate through consecutive prox points
                gamma = (tk - 1.0) / tk_next
                b0_y = b0_c + gamma * (b0_c - b0_z)
                w_y = w_c + gamma * (w_c - w_z)
                scores_y = scores_c + gamma * (scores_c - scores_z)
                loss_y = loss_at(scores_y, delta)
                y_is_x = gamma == 0.0
                b0_z, w_z, scores_z = b0_c, w_c, scores_c
                tk = tk_next
            else:
                # trial went uphill relative to the anchor: restart momentum
                if cfg.keep_history:
                    history.append(total)
                stuck += 1
                tk = 1.0
                b0_z, w_z, scores_z = b0, w, scores
                y_is_x = True
                b0_y, w_y, scores_y, loss_y = b0, w, scores, loss
                if stuck >= 50:
                    # repeated restarts without anchor progress
                    stage_done = True
                    converged = final_stage and stationary(delta)
                    break
        if not stage_done:
            break  # iteration budget exhausted

    g0, gw = grad_at(scores, stages[-1])
    grad_inf = max(abs(g0), float(np.max(np.abs(gw))) if n else 0.0)
    kkt = None
    if lam > 0.0:
        kkt = current_kkt(stages[-1])
        if converged:
            assert kkt <= 1e-4, f"converged L1 fit violates stationarity: {kkt:.3e}"
    weights = WeightVector(b0, w)
    scores = b0 + X @ w
    train_acc = float(np.mean((scores >= 0.0) == (y == 1.0)))
    if logistic:
        objective = _logistic_value(X, y, b0, w, lam)
    else:
        objective = _true_hinge_value(X, t_signed, b0, w, lam)
    diag = SolverDiagnostics(
        iterations=iterations,
        objective=objective,
        converged=converged,
        grad_inf_norm=grad_inf,
        kkt_violation=kkt,
        train_accuracy=train_acc,
        hinge_smoothing=None if logistic else cfg.hinge_smoothing,
        objective_history=tuple(history) if cfg.keep_history else None,
    )
    return LinearModel(
        kind="LR" if logistic else "SVM",
        lam=lam,
        weights=weights,
        standardization=standardization or _identity_standardization(n),
        feature_names=feature_names or d.feature_names,
        diagnostics=diag,
    )


def fit_path(
    d: Dataset,
    kind: ObjectiveKind,
    lambdas,
    cfg: SolverConfig | None = None,
    *,
    standardization: StandardizationParams | None = None,
) -> list[LinearModel]:
    """Fit one model per penalty value, warm-starting along the path.

    Fits run from the largest penalty downward, each initialized at the
    previous solution; results are returned aligned with ``lambdas``.
    """
    cfg = cfg or SolverConfig()
    lambdas = [float(v) for v in lambdas]
    order = sorted(range(len(lambdas)), key=lambda i: -lambdas[i])
    models: dict[int, LinearModel] = {}
    warm = cfg.initial_weights
    for i in order:
        lam = lambdas[i]
        if lam > 0.0:
            spec = ObjectiveSpec(kind if kind.penalized else _penalized_twin(kind), lam)
        else:
            spec = ObjectiveSpec(_plain_twin(kind), 0.0)
        sub_cfg = dataclasses.replace(cfg, initial_weights=warm)
        model = fit(d, spec, sub_cfg, standardization=standardization)
        models[i] = model
        warm = model.weights
    return [models[i] for i in range(len(lambdas))]


def _penalized_twin(kind: ObjectiveKind) -> ObjectiveKind:
    return ObjectiveKind.LOGISTIC_L1 if kind.is_logistic else ObjectiveKind.HINGE_L1


def _plain_twin(kind: ObjectiveKind) -> ObjectiveKind:
    return ObjectiveKind.LOGISTIC_PLAIN if kind.is_logistic else ObjectiveKind.HINGE_PLAIN


def _standardized_features(model: LinearModel, d: Dataset) -> np.ndarray:
    if model.feature_names != d.feature_names:
        raise DataError("model and dataset feature names do not match")
    return apply_standardizer(d, model.standardization).features


def decision_values(model: LinearModel, d: Dataset) -> np.ndarray:
    """Raw scores b0 + <w, standardized x> for unstandardized inputs."""
    feats = _standardized_features(model, d)
    return model.weights.intercept + feats @ model.weights.weights


def predict(model: LinearModel, d: Dataset) -> np.ndarray:
    """0/1 labels from raw inputs; a score of exactly 0 maps to class 1."""
    return (decision_values(model, d) >= 0.0).astype(np.int64)


def predict_proba(model: LinearModel, d: Dataset) -> np.ndarray:
    """P(label = 1) for LR models; hinge scores carry no probability."""
    if model.kind != "LR":
        raise ValueError("probabilities are defined for LR models only")
    return _sigmoid(decision_values(model, d))


_FORMAT = "sparsebench-model-v1"


def save_model(model: LinearModel, path) -> None:
    """Serialize to JSON; floats keep their shortest round-trip form."""
    diag = model.diagnostics
    doc = {
        "format": _FORMAT,
        "kind": model.kind,
        "lambda": model.lam,
        "feature_names": list(model.feature_names),
        "intercept": model.weights.intercept,
        "weights": model.weights.weights.tolist(),
        "standardization": {
            "means": model.standardization.means.tolist(),
            "std_devs": model.standardization.std_devs.tolist(),
            "constant": model.standardization.constant.astype(int).tolist(),
        },
        "diagnostics": {
            "iterations": diag.iterations,
            "objective": diag.objective,
            "converged": diag.converged,
            "grad_inf_norm": diag.grad_inf_norm,
            "kkt_violation": diag.kkt_violation,
            "train_accuracy": diag.train_accuracy,
            "hinge_smoothing": diag.hinge_smoothing,
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_model(path) -> LinearModel:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != _FORMAT:
        raise SolverError(f"{path}: unsupported model format {doc.get('format')!r}")
    sd = doc["standardization"]
    dd = doc["diagnostics"]
    return LinearModel(
        kind=doc["kind"],
        lam=doc["lambda"],
        weights=WeightVector(doc["intercept"], np.array(doc["weights"], dtype=np.float64)),
        standardization=StandardizationParams(
            np.array(sd["means"], dtype=np.float64),
            np.array(sd["std_devs"], dtype=np.float64),
            np.array(sd["constant"], dtype=bool),
        ),
        feature_names=tuple(doc["feature_names"]),
        diagnostics=SolverDiagnostics(
            iterations=dd["iterations"],
            objective=dd["objective"],
            converged=dd["converged"],
            grad_inf_norm=dd["grad_inf_norm"],
            kkt_violation=dd["kkt_violation"],
            train_accuracy=dd["train_accuracy"],
            hinge_smoothing=dd["hinge_smoothing"],
        ),
    )
