"""Synthetic classification problems with known ground truth, and the
independent oracles the test suite measures everything against.

Features are standard normal, optionally sharing a common factor so every
pair of columns has correlation rho. Labels come from a linear score
through one of two noise models:

* "logistic": label ~ Bernoulli(sigmoid(score)); the Bayes rate is
  E[max(p, 1-p)], estimated once per configuration on 1e6 score draws.
* "margin": label = [score >= 0], then flipped independently with
  probability flip_prob; Bayes accuracy is exactly 1 - flip_prob.

The reference minimizers here deliberately share no code with the solvers
module: hinge problems are solved exactly as linear programs (HiGHS), the
logistic ones with L-BFGS-B on the nonnegative split w = p - q. Reported
objective values are recomputed by naive per-sample fsum summation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from .dataset import Dataset
from .objectives import ObjectiveSpec, WeightVector
from .rng import make_rng

__all__ = [
    "SyntheticSpec",
    "GroundTruth",
    "OracleError",
    "generate",
    "oracle_minimize",
    "naive_logistic_cost",
    "naive_hinge_cost",
]

# dedicated stream tag for the Bayes-rate Monte Carlo draw
_BAYES_TAG = 0xBA1E5
_BAYES_SAMPLES = 1_000_000
_bayes_cache: dict[tuple, float] = {}


@dataclass(frozen=True)
class SyntheticSpec:
    """Generator configuration.

    support maps feature index -> true weight; all other true weights are
    zero. feature_correlation is the common pairwise correlation in [0, 1).
    """

    m: int
    n: int
    support: tuple[tuple[int, float], ...]
    intercept: float = 0.0
    noise_model: str = "logistic"
    flip_prob: float = 0.0
    feature_correlation: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "support", tuple((int(j), float(v)) for j, v in self.support))
        if self.m < 1 or self.n < 1:
            raise ValueError("m and n must be positive")
        if self.noise_model not in ("logistic", "margin"):
            raise ValueError(f"unknown noise model {self.noise_model!r}")
        if not 0.0 <= self.flip_prob < 0.5:
            raise ValueError("flip_prob must lie in [0, 0.5)")
        if not 0.0 <= self.feature_correlation < 1.0:
            raise ValueError("feature_correlation must lie in [0, 1)")
        seen = set()
        for j, v in self.support:
            if not 0 <= j < self.n:
                raise ValueError(f"support index {j} outside [0, {self.n})")
            if j in seen:
                raise ValueError(f"duplicate support index {j}")
            if v == 0.0:
                raise ValueError(f"support weight at {j} must be nonzero")
            seen.add(j)

    def true_weights(self) -> np.ndarray:
        w = np.zeros(self.n)
        for j, v in self.support:
            w[j] = v
        return w


@dataclass(frozen=True)
class GroundTruth:
    """What the generator knew: true linear rule and its Bayes accuracy."""

    weights: np.ndarray
    intercept: float
    noise_model: str
    flip_prob: float
    bayes_accuracy: float
    support: tuple[int, ...] = field(default=())

    def bayes_labels(self, features: np.ndarray) -> np.ndarray:
        """Optimal predictions: the sign of the true score (both models)."""
        scores = self.intercept + np.asarray(features) @ self.weights
        return (scores >= 0.0).astype(np.int64)


class OracleError(RuntimeError):
    pass


def _score_std(spec: SyntheticSpec) -> float:
    # score = intercept + sqrt(1-rho) <w, z> + sqrt(rho) (sum w) u
    w = [v for _, v in spec.support]
    rho = spec.feature_correlation
    var = (1.0 - rho) * sum(v * v for v in w) + rho * sum(w) ** 2
    return math.sqrt(var)


def _bayes_accuracy(spec: SyntheticSpec) -> float:
    if spec.noise_model == "margin":
        return 1.0 - spec.flip_prob
    key = (spec.feature_correlation, spec.intercept, spec.support)
    if key not in _bayes_cache:
        rng = make_rng(_BAYES_TAG)
        scores = spec.intercept + _score_std(spec) * rng.standard_normal(_BAYES_SAMPLES)
        p = 1.0 / (1.0 + np.exp(-scores))
        _bayes_cache[key] = float(np.maximum(p, 1.0 - p).mean())
    return _bayes_cache[key]


def generate(spec: SyntheticSpec) -> tuple[Dataset, GroundTruth]:
    """Draw a dataset from ``spec``; same spec -> bit-identical output.

    Draw order (one PCG64 stream seeded by spec.seed): feature matrix,
    common factor when correlated, then the label noise.
    """
    rng = make_rng(spec.seed)
    X = rng.standard_normal((spec.m, spec.n))
    rho = spec.feature_correlation
    if rho > 0.0:
        u = rng.standard_normal(spec.m)
        X = math.sqrt(1.0 - rho) * X + math.sqrt(rho) * u[:, None]
    w = spec.true_weights()
    scores = spec.intercept + X @ w
    if spec.noise_model == "margin":
        base = scores >= 0.0
        flips = rng.random(spec.m) < spec.flip_prob
        labels = (base ^ flips).astype(np.int64)
    else:
        p = 1.0 / (1.0 + np.exp(-scores))
        labels = (rng.random(spec.m) < p).astype(np.int64)
    width = max(3, len(str(spec.n - 1)))
    names = tuple(f"f{j:0{width}d}" for j in range(spec.n))
    ids = tuple(f"s{i:04d}" for i in range(spec.m))
    truth = GroundTruth(
        weights=w,
        intercept=spec.intercept,
        noise_model=spec.noise_model,
        flip_prob=spec.flip_prob,
        bayes_accuracy=_bayes_accuracy(spec),
        support=tuple(sorted(j for j, _ in spec.support)),
    )
    return Dataset(X, labels, names, ids), truth


def naive_logistic_cost(w: WeightVector, d: Dataset, lam: float = 0.0) -> float:
    """Sample-by-sample mean cross-entropy, summed with math.fsum."""
    terms = []
    for i in range(d.n_samples):
        s = w.intercept + float(np.dot(d.features[i], w.weights))
        # log(1 + exp(s)) - y s, computed without overflow
        terms.append(math.log1p(math.exp(-abs(s))) + max(s, 0.0) - d.labels[i] * s)
    penalty = lam * math.fsum(abs(float(v)) for v in w.weights)
    return math.fsum(terms) / d.n_samples + penalty


def naive_hinge_cost(w: WeightVector, d: Dataset, lam: float = 0.0) -> float:
    """Sample-by-sample hinge sum, accumulated with math.fsum."""
    terms = []
    for i in range(d.n_samples):
        s = w.intercept + float(np.dot(d.features[i], w.weights))
        t = 2.0 * d.labels[i] - 1.0
        terms.append(max(0.0, 1.0 - t * s))
    penalty = lam * math.fsum(abs(float(v)) for v in w.weights)
    return math.fsum(terms) + penalty


_ORACLE_MAX_M = 200
_ORACLE_MAX_N = 8


def oracle_minimize(obj: ObjectiveSpec, d: Dataset) -> tuple[float, WeightVector]:
    """Reference minimum of ``obj`` on ``d`` (desk scale: m <= 200, n <= 8).

    Fails loudly (OracleError) when the backend does not report optimality
    or two independent starts disagree.
    """
    if d.n_samples > _ORACLE_MAX_M or d.n_features > _ORACLE_MAX_N:
        raise OracleError(
            f"oracle is desk-scale only (m <= {_ORACLE_MAX_M}, n <= {_ORACLE_MAX_N}); "
            f"got {d.n_samples} x {d.n_features}"
        )
    if obj.kind.is_logistic:
        weights = _oracle_logistic(obj.lam, d)
        return naive_logistic_cost(weights, d, obj.lam), weights
    weights = _oracle_hinge(obj.lam, d)
    return naive_hinge_cost(weights, d, obj.lam), weights


def _oracle_logistic(lam: float, d: Dataset) -> WeightVector:
    X = d.features
    y = d.labels.astype(np.float64)
    m, n = X.shape

    def fun(theta):
        b0, p, q = theta[0], theta[1 : 1 + n], theta[1 + n :]
        s = b0 + X @ (p - q)
        loss = np.logaddexp(0.0, s) - y * s
        val = loss.sum() / m + lam * (p.sum() + q.sum())
        r = 1.0 / (1.0 + np.exp(-np.abs(s)))
        r = np.where(s >= 0, r, 1.0 - r) - y  # sigmoid(s) - y, overflow-safe
        gb = X.T @ r / m
        grad = np.concatenate(([r.sum() / m], gb + lam, -gb + lam))
        return val, grad

    bounds = [(None, None)] + [(0.0, None)] * (2 * n)
    results = []
    for start_scale in (0.0, 1e-2):
        x0 = np.full(1 + 2 * n, start_scale)
        res = scipy.optimize.minimize(
            fun,
            x0,
            jac=True,
            method="L-BFGS-B",
            bounds=bounds,
            options={"maxiter": 20000, "maxfun": 200000, "ftol": 1e-16, "gtol": 1e-12},
        )
        if not np.all(np.isfinite(res.x)):
            raise OracleError(f"logistic oracle produced non-finite iterate: {res.message}")
        results.append(res)
    vals = [float(r.fun) for r in results]
    if abs(vals[0] - vals[1]) > 1e-7 * max(1.0, abs(vals[0])):
        raise OracleError(f"logistic oracle starts disagree: {vals[0]!r} vs {vals[1]!r}")
    best = results[int(np.argmin(vals))]
    b0, p, q = best.x[0], best.x[1 : 1 + n], best.x[1 + n :]
    return WeightVector(float(b0), p - q)


def _oracle_hinge(lam: float, d: Dataset) -> WeightVector:
    # LP in [b0, p, q, xi]: min lam*1'(p+q) + 1'xi
    # s.t. xi_i >= 1 - t_i (b0 + <p - q, x_i>), xi >= 0, p, q >= 0
    X = d.features
    t = 2.0 * d.labels.astype(np.float64) - 1.0
    m, n = X.shape
    c = np.concatenate(([0.0], np.full(2 * n, lam), np.ones(m)))
    tx = t[:, None] * X
    a_ub = np.hstack([-t[:, None], -tx, tx, -np.eye(m)])
    b_ub = -np.ones(m)
    bounds = [(None, None)] + [(0.0, None)] * (2 * n + m)
    res = scipy.optimize.linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        raise OracleError(f"hinge LP did not reach optimality: {res.message}")
    b0, p, q = res.x[0], res.x[1 : 1 + n], res.x[1 + n : 1 + 2 * n]
    return WeightVector(float(b0), p - q)
