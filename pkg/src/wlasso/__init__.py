"""Variable selection for highly correlated predictors via design whitening.

The core idea: estimate the (block-structured) correlation matrix of the
predictors, multiply the design by its inverse square root so the columns
decorrelate, fit an l1-penalized model whose penalty acts on the original
coefficients, and map the estimate back with magnitude thresholding at both
stages.  Baseline selectors (plain Lasso and the minimum-norm projection
estimator), an irrepresentable-condition diagnostic and a seeded simulation
harness are included.
"""

__version__ = "0.1.0"

from .baselines import SelectorOutput, holp_estimate, holp_select, lasso_select
from .correlation import (
    BlockCorrelationModel,
    SampleCorrelation,
    adaptive_two_clusters,
    block_average,
    complete_linkage_two_clusters,
    estimate_block_sigma,
    expand_block_model,
    sample_correlation,
)
from .diagnostics import (
    ICReport,
    RecoveryMetrics,
    best_diff_over_levels,
    ic_check,
    recovery_metrics,
)
from .linalg import (
    SpectralFactorization,
    WhiteningOperator,
    spectral_decompose,
    whitening_operator,
)
from .pipeline import (
    ThresholdRule,
    WLassoFit,
    backtransform,
    select_K,
    select_lambda,
    select_M,
    threshold_beta,
    threshold_beta_tilde,
    whiten_design,
    wlasso_fit,
)
from .simulation import (
    ReplicationSummary,
    Scenario,
    generate_dataset,
    run_scenario,
)
from .solver import (
    LambdaGrid,
    RegularizationPath,
    generalized_lasso_whitened,
    lambda_grid,
    lasso_path,
)

__all__ = [
    "BlockCorrelationModel",
    "ICReport",
    "LambdaGrid",
    "RecoveryMetrics",
    "RegularizationPath",
    "ReplicationSummary",
    "SampleCorrelation",
    "Scenario",
    "SelectorOutput",
    "SpectralFactorization",
    "ThresholdRule",
    "WLassoFit",
    "WhiteningOperator",
    "adaptive_two_clusters",
    "backtransform",
    "best_diff_over_levels",
    "block_average",
    "complete_linkage_two_clusters",
    "estimate_block_sigma",
    "expand_block_model",
    "generalized_lasso_whitened",
    "generate_dataset",
    "holp_estimate",
    "holp_select",
    "ic_check",
    "lambda_grid",
    "lasso_path",
    "lasso_select",
    "recovery_metrics",
    "run_scenario",
    "sample_correlation",
    "select_K",
    "select_M",
    "select_lambda",
    "spectral_decompose",
    "threshold_beta",
    "threshold_beta_tilde",
    "whiten_design",
    "whitening_operator",
    "wlasso_fit",
]
