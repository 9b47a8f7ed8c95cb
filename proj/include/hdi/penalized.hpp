#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "hdi/model_data.hpp"

namespace hdi {

/// Tuning for the penalized fits. lambda0 is the absolute penalty level of the
/// objective; when unset it defaults to 1.1 * sigma_pre * sqrt(2 log p / n)
/// for linear fits (sigma_pre from a preliminary scaled-lasso pass) and
/// 1.1 * sqrt(2 log p / n) for logistic fits. cv_folds > 0 switches to k-fold
/// cross-validation on a log-spaced grid (minimum-CV rule, ties broken toward
/// the larger, sparser lambda; fold assignment is seeded and deterministic).
struct PenaltyConfig {
  std::optional<double> lambda0;
  std::optional<Eigen::VectorXd> weights; // per-column, intercept entry ignored
  int cv_folds = 0;
  std::uint64_t cv_seed = 1;
  int max_iter = 100000; // coordinate sweeps
  double tol = 1e-7;     // max coordinate update
  bool track_objective = false;
};

struct PenalizedFit {
  Eigen::VectorXd beta;       // length p+1, entry 0 is the intercept
  double sigma_eps = 0.0;     // sqrt(||y - X beta||^2 / n), linear paths only
  double lambda = 0.0;        // penalty level actually used
  std::vector<int> active_set; // nonzero penalized coefficients (column indices)
  bool converged = false;
  double kkt_residual = 0.0;
  bool sigma_floor_hit = false;
  int sweeps = 0;
  std::vector<double> objective_trace; // per sweep, when track_objective
};

struct GroupFit {
  Eigen::MatrixXd B;          // (p+1) x D, row 0 is the intercept row
  double sigma_eps = 0.0;     // pooled residual scale
  double lambda = 0.0;
  std::vector<int> active_rows;
  bool converged = false;
  double kkt_residual = 0.0;
  int sweeps = 0;
};

/// L1-penalized least squares with per-column weights ||X_j||/sqrt(n) and an
/// unpenalized intercept; solved by cyclic coordinate descent with active-set
/// iteration, converged when the KKT residual is below tolerance.
PenalizedFit fit_lasso(const Dataset& data, const PenaltyConfig& config = {});

/// Joint (beta, sigma) estimation: alternate lasso at penalty lambda0 * sigma
/// with the residual-scale update sigma^2 = ||y - X beta||^2 / n. Here
/// config.lambda0 is the scale-free level (default 1.1 sqrt(2 log p / n)).
/// sigma is floored at 1e-6 * sd(y); hitting the floor sets a flag.
PenalizedFit fit_scaled_lasso(const Dataset& data, const PenaltyConfig& config = {});

/// L1-penalized logistic likelihood (mean scale), solved by damped iteratively
/// reweighted coordinate descent. Errors on constant outcomes and on complete
/// separation when lambda0 == 0.
PenalizedFit fit_logistic_lasso(const Dataset& data, const PenaltyConfig& config = {});

/// Row-grouped L1/L2 penalty for a multivariate response: rows of B enter and
/// leave the model jointly. X must carry the leading ones column.
GroupFit fit_group_lasso(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                         const PenaltyConfig& config = {});

nlohmann::json fit_to_json(const PenalizedFit& fit, Link link);

namespace detail {

/// Lasso over a precomputed Gram matrix: all columns live in a shared pool P
/// with G = P'P/n. The response is pool column `response`; the design is the
/// pool columns listed in `design` (col_weights aligned to it, 0 = unpenalized).
/// Minimizes ||P_resp - P_design g||^2/(2n) + lambda * sum_j w_j |g_j|.
struct GramLassoFit {
  Eigen::VectorXd gamma;    // aligned to design
  double resid_var = 0.0;   // ||response - fit||^2 / n
  double kkt_residual = 0.0;
  bool converged = false;
  int sweeps = 0;
};
GramLassoFit fit_lasso_gram(const Eigen::MatrixXd& G, int response,
                            const std::vector<int>& design,
                            const Eigen::VectorXd& col_weights, double lambda,
                            double tol = 1e-7, int max_sweeps = 100000,
                            double kkt_tol = 1e-7);

/// Weighted lasso on explicit data; obs_weights may be null for unit weights.
/// Used as the inner solver of the linear, scaled and logistic fits.
struct CdResult {
  Eigen::VectorXd beta;
  double kkt_residual = 0.0;
  bool converged = false;
  int sweeps = 0;
  std::vector<double> objective_trace;
};
CdResult lasso_cd(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  const Eigen::VectorXd* obs_weights, double lambda,
                  const Eigen::VectorXd& col_weights, const Eigen::VectorXd& beta0,
                  double tol, int max_sweeps, double kkt_tol, bool trace);

/// Default projection/penalty rate 1.1 * sqrt(2 log p / n).
double default_rate(Eigen::Index n, Eigen::Index p);

} // namespace detail

} // namespace hdi
