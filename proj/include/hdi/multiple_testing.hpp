#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "hdi/model_data.hpp"
#include "hdi/penalized.hpp"

namespace hdi {

enum class NullFamily { std_normal_folded, chi_square };

/// Per-covariate test statistics W_2..W_{p+1} (stored 0-based: entry i is the
/// covariate in column i+1 of X) with their null family, optional auxiliary
/// sparsity statistics S, and per-index diagnostics. Statistics whose inner
/// regression failed are flagged invalid and excluded from testing.
struct TestStatisticSet {
  Eigen::VectorXd W;
  NullFamily family = NullFamily::std_normal_folded;
  int chi_df = 0;
  std::optional<Eigen::VectorXd> S;
  std::vector<unsigned char> valid;
  std::vector<std::string> warnings;
  // diagnostics from the (first-sample) inverse regressions
  Eigen::VectorXd r_hat;
  Eigen::VectorXd sigma2;
  Eigen::VectorXd theta;
};

struct MtOptions {
  std::optional<double> inner_lambda; // node-wise penalty; default 1.1 sqrt(2 log p / n)
  PenaltyConfig outer_fit;
  const PenalizedFit* precomputed_fit = nullptr;
  const PenalizedFit* precomputed_fit2 = nullptr;
};

/// One-sample linear coefficients via inverse regression: for each covariate,
/// regress it on (centered outcome, remaining covariates), bias-correct the
/// residual covariance with the fitted lasso, and studentize.
TestStatisticSet one_sample_stats(const Dataset& data, const MtOptions& opt = {});

/// Two-sample coefficient differences; also returns the auxiliary statistics
/// S used by the sparsity-adaptive procedure.
TestStatisticSet two_sample_stats(const Dataset& data1, const Dataset& data2,
                                  const MtOptions& opt = {});

/// Row tests for a multivariate response: sum of squared standardized
/// per-response statistics, chi-square(D) null.
TestStatisticSet multivariate_stats(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                    const GroupFit& fit, const MtOptions& opt = {});

/// Logistic coefficients via node-wise decorrelation on the weighted design.
TestStatisticSet logistic_stats(const Dataset& data, const MtOptions& opt = {});

/// Normal-quantile transform to the folded-normal scale. For the folded
/// normal family this is exactly |W|; for chi-square(D) the null cdf is
/// evaluated and values at the upper numerical boundary are clamped to 40.
/// Invalid entries map to NaN.
Eigen::VectorXd normal_transform(const TestStatisticSet& stats);

struct GapGrouping {
  int K = 1;
  std::vector<double> splits;
  std::vector<int> sizes;
  std::vector<double> pi_hat;
  std::vector<double> weights;
};

struct TestingOutcome {
  Eigen::VectorXd N;
  double t_hat = 0.0;
  std::vector<int> rejected; // 0-based covariate indices
  double fdp_estimate = 0.0;
  double alpha = 0.05;
  std::string procedure;
  std::optional<GapGrouping> grouping;
  std::vector<std::string> warnings;
};

/// Threshold search over the sorted transformed statistics: the smallest
/// candidate t with 2p(1-Phi(t))/max(R(t),1) <= alpha, capped at
/// sqrt(2 log p - 2 log log p) with fallback sqrt(2 log p). NaN entries are
/// excluded. (CLI name: procedure "alg1".)
TestingOutcome fdr_threshold(const Eigen::VectorXd& N, double alpha);

/// Storey-type estimate of the proportion of non-nulls at threshold 1/2,
/// clamped to [delta, 1-delta].
double estimate_nonnull_proportion(const std::vector<double>& pvals, double delta);

struct GapConfig {
  std::vector<int> K_candidates{1, 2};
  std::vector<double> split_quantiles{0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  double delta = 0.01; // clamp for the non-null proportion
};

/// Grouping/adjusting/pooling: group by the auxiliary statistics at candidate
/// quantile splits, reweight p-values with proper group weights, and apply the
/// weighted step-up rule; the grouping with the most rejections wins (ties:
/// fewer groups, then smaller first split). Without S this reduces to the
/// single-group unweighted step-up and records a warning.
TestingOutcome gap_procedure(const Eigen::VectorXd& N,
                             const std::optional<Eigen::VectorXd>& S, double alpha,
                             const GapConfig& config = {});

} // namespace hdi
