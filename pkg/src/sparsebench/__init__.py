"""Sparse linear classification benchmark toolkit.

Binary classification with logistic regression and linear SVM, each with
an optional L1 penalty, plus the evaluation protocol around them:
repeated stratified holdout, cross-validated penalty selection, feature
ranking, and synthetic problem generation with known ground truth.
"""

from .dataset import (
    DataError,
    Dataset,
    ModalitySpec,
    StandardizationParams,
    apply_standardizer,
    assemble_modality,
    fit_standardizer,
    load_csv,
    load_feature_list,
    save_csv,
    take_rows,
)
from .evaluation import (
    CLASSIFIER_KINDS,
    PAPER_LAMBDA_GRID,
    ConfusionMatrix,
    CVPlan,
    CVTable,
    EvalReport,
    GroupComparison,
    Metrics,
    SplitPlan,
    compare_groups,
    compute_metrics,
    kfold_indices,
    run_protocol,
    select_lambda,
    stratified_split,
)
from .features import (
    AccuracyCurve,
    FeatureRank,
    FeatureRanking,
    accuracy_vs_k,
    lambda_path_points,
    rank_features,
    sparsity_report,
)
from .rng import make_rng
from .objectives import (
    ObjectiveKind,
    ObjectiveSpec,
    WeightVector,
    hinge_cost,
    logistic_cost,
    logistic_gradient,
    sigmoid_prob,
    soft_threshold,
)
from .solvers import (
    LinearModel,
    SolverConfig,
    SolverDiagnostics,
    decision_values,
    fit,
    fit_path,
    kkt_violation,
    lambda_max,
    load_model,
    predict,
    predict_proba,
    save_model,
)
from .synthgen import (
    GroundTruth,
    OracleError,
    SyntheticSpec,
    generate,
    naive_hinge_cost,
    naive_logistic_cost,
    oracle_minimize,
)

__version__ = "0.1.0"
