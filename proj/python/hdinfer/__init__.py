"""Debiased inference for high-dimensional linear and logistic regression.

Thin wrapper over the compiled core: penalized fits, projection directions,
debiased confidence intervals for linear/quadratic functionals, and
large-scale multiple testing with FDR control.
"""

from ._core import (  # noqa: F401
    Dataset,
    GapGrouping,
    GroupFit,
    InferenceResult,
    InvalidInput,
    PenalizedFit,
    ProjectionDirection,
    SolverError,
    TestDecision,
    TestStatisticSet,
    TestingOutcome,
    cate,
    chi2_cdf,
    estimate_nonnull_proportion,
    fdr_threshold,
    fit_group_lasso,
    fit_lasso,
    fit_logistic_lasso,
    fit_scaled_lasso,
    gap,
    generate_synthetic,
    inner_product,
    lf,
    logistic_stats,
    multivariate_stats,
    norm_quantile,
    normal_transform,
    one_sample_stats,
    qf,
    qf_semisupervised,
    run_experiment,
    solve_projection,
    two_sample_stats,
)

__version__ = "0.1.0"
