"""Object ranking with an analogy kernel over preference pairs.

Training rankings are turned into labeled ordered item pairs, a kernel SVM
learns pairwise preference directions from graded analogical proportions,
calibrated outputs form a reciprocal preference matrix, and a
Bradley-Terry-Luce fit aggregates it into a total order.
"""

from .baselines import LinearModel, able2rank_lite, err_fit, err_rank, ranksvm_fit, ranksvm_rank
from .data import (
    DataFormatError,
    FeatureKind,
    FeatureSchema,
    KsDecision,
    NormalizationMode,
    NormalizationScope,
    NormalizationStats,
    RankedDataset,
    RankedQuery,
    choose_normalization_scope,
    ks_two_sample,
    load_dataset,
    minmax_fit_apply,
    normalize_train_test,
    save_dataset,
    zscore_fit_apply,
)
from .evaluate import (
    METHOD_NAMES,
    ExperimentResult,
    MethodConfig,
    average_ranks,
    competition_ranks,
    format_results_table,
    ranking_loss,
    results_to_csv,
    run_experiment,
    score_external_orderings,
)
from .kernel import (
    KernelVariant,
    boolean_proportion,
    gram_matrix,
    is_psd,
    kernel_matrix,
    pair_kernel,
    principal_minors_nonneg,
    proportion_degree,
    scalar_kernel,
)
from .ranker import (
    AnkerModel,
    BtlParams,
    PairInstance,
    RankPrediction,
    anker_fit,
    anker_predict,
    anker_rank,
    btl_fit,
    btl_log_likelihood,
    build_pair_instances,
    load_model,
    normalize_query_with_stats,
    ordering_from_ranking,
    preference_matrix,
    rank_from_theta,
    reciprocal_preferences,
    save_model,
)
from .svm import (
    DEFAULT_C_GRID,
    PlattParams,
    SvmModel,
    decision_value,
    decision_values,
    dual_objective,
    platt_fit,
    platt_prob,
    select_c,
    smo_train,
)

__version__ = "0.1.0"

__all__ = [
    "AnkerModel",
    "BtlParams",
    "DataFormatError",
    "DEFAULT_C_GRID",
    "ExperimentResult",
    "FeatureKind",
    "FeatureSchema",
    "KernelVariant",
    "KsDecision",
    "LinearModel",
    "METHOD_NAMES",
    "MethodConfig",
    "NormalizationMode",
    "NormalizationScope",
    "NormalizationStats",
    "PairInstance",
    "PlattParams",
    "RankPrediction",
    "RankedDataset",
    "RankedQuery",
    "SvmModel",
    "able2rank_lite",
    "anker_fit",
    "anker_predict",
    "anker_rank",
    "average_ranks",
    "boolean_proportion",
    "btl_fit",
    "btl_log_likelihood",
    "build_pair_instances",
    "choose_normalization_scope",
    "competition_ranks",
    "decision_value",
    "decision_values",
    "dual_objective",
    "err_fit",
    "err_rank",
    "format_results_table",
    "gram_matrix",
    "is_psd",
    "kernel_matrix",
    "ks_two_sample",
    "load_dataset",
    "load_model",
    "minmax_fit_apply",
    "normalize_query_with_stats",
    "normalize_train_test",
    "ordering_from_ranking",
    "pair_kernel",
    "platt_fit",
    "platt_prob",
    "preference_matrix",
    "principal_minors_nonneg",
    "proportion_degree",
    "rank_from_theta",
    "ranking_loss",
    "ranksvm_fit",
    "ranksvm_rank",
    "reciprocal_preferences",
    "results_to_csv",
    "run_experiment",
    "save_dataset",
    "save_model",
    "scalar_kernel",
    "score_external_orderings",
    "select_c",
    "smo_train",
    "zscore_fit_apply",
]
