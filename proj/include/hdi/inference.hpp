#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hdi/model_data.hpp"
#include "hdi/penalized.hpp"
#include "hdi/projection.hpp"

namespace hdi {

enum class Weighting { linearization, link_specific };

Weighting weighting_from_string(const std::string& name);

struct TestDecision {
  double statistic = 0.0;
  bool reject = false;
};

struct InferenceResult {
  double estimate = 0.0;
  double variance = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  double alpha = 0.05;
  double z_stat = 0.0;
  std::optional<std::pair<double, double>> transformed_ci; // h-scale interval
  std::optional<double> transformed_estimate;
  std::optional<TestDecision> test;
  bool degenerate = false;
  std::vector<std::string> flags;
  std::map<std::string, double> extras;
};

nlohmann::json result_to_json(const InferenceResult& r);

/// Options shared by the functional-inference entry points. A precomputed fit
/// may be supplied to avoid refitting; proj_lambda and tau override the
/// default tuning levels 1.1*sqrt(2 log p / n) and 2*sqrt(log n).
struct InferenceOptions {
  double alpha = 0.05;
  PenaltyConfig fit;
  std::optional<double> proj_lambda;
  std::optional<double> tau;
  Weighting weighting = Weighting::linearization;
  bool sample_splitting = false; // quadratic-functional path only
  double tau_var = 1.0;          // variance inflation term tau/n
  const PenalizedFit* precomputed_fit = nullptr;
  const PenalizedFit* precomputed_fit2 = nullptr; // two-sample paths
};

/// Debiased estimate, CI and z statistic for x_new' beta under the linear
/// model. x_new = e_j recovers single-coefficient inference.
InferenceResult lf_linear(const Dataset& data, const Eigen::VectorXd& x_new,
                          const InferenceOptions& opt = {});

/// Debiased estimate for x_new' beta under the logistic model, with the
/// h-transformed interval for the case probability.
InferenceResult lf_logistic(const Dataset& data, const Eigen::VectorXd& x_new,
                            const InferenceOptions& opt = {});

/// Contrast of two regression functions at x_new. The estimate, interval and
/// the one-sided test (H0: contrast <= 0 rejected when the lower one-sided
/// bound clears zero) are on the linear-predictor scale; under the logistic
/// link the probability-scale difference is reported as transformed_estimate.
InferenceResult cate(const Dataset& data1, const Dataset& data2,
                     const Eigen::VectorXd& x_new, const InferenceOptions& opt = {});

struct QuadTarget {
  enum class Mode { matrix_A, covariance_Sigma };
  std::vector<int> G;      // covariate columns of X (0-based, excluding intercept)
  Mode mode = Mode::covariance_Sigma;
  Eigen::MatrixXd A;       // |G| x |G| symmetric, matrix_A mode
  double tau_var = 1.0;
};

/// Quadratic functional beta_G' A beta_G or beta_G' Sigma_GG beta_G with the
/// one-sided significance test. When the plug-in loading vanishes the
/// projection is skipped and the result is flagged "null_loading".
InferenceResult qf(const Dataset& data, const QuadTarget& target,
                   const InferenceOptions& opt = {});

/// Semi-supervised beta' Sigma beta using additional unlabeled covariate rows
/// (raw covariates, no intercept column). Lower CI endpoint is clipped at 0.
InferenceResult qf_semisupervised(const Dataset& labeled,
                                  const Eigen::MatrixXd& unlabeled_X,
                                  const InferenceOptions& opt = {});

/// Debiased inner product beta1' beta2 of two linear regressions; directions
/// use the cross-sample Grams with the alignment constraint off.
InferenceResult inner_product(const Dataset& data1, const Dataset& data2,
                              const InferenceOptions& opt = {});

} // namespace hdi
