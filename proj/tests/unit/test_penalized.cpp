#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>

#include "hdi/penalized.hpp"
#include "hdi/rng.hpp"
#include "oracles.hpp"

using namespace hdi;

namespace {

double soft(double z, double t) { return z > t ? z - t : (z < -t ? z + t : 0.0); }

// design whose penalized columns are orthonormal (X'X/n = I) and orthogonal
// to the intercept
Eigen::MatrixXd orthonormal_design(CounterRng& rng, Eigen::Index n, Eigen::Index p) {
  Eigen::MatrixXd M(n, p + 1);
  M.col(0).setOnes();
  M.rightCols(p) = oracle::gaussian_matrix(rng, n, p);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(M);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, p + 1);
  return std::sqrt(static_cast<double>(n)) * Q.rightCols(p);
}

Dataset random_linear_data(std::uint64_t seed, Eigen::Index n, Eigen::Index p,
                           int sparsity, double noise = 1.0) {
  CounterRng rng(seed, 7);
  Eigen::MatrixXd X = oracle::gaussian_matrix(rng, n, p);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  for (int k = 0; k < sparsity; ++k)
    beta[k * std::max<Eigen::Index>(p / std::max(sparsity, 1), 1)] = 1.0;
  Eigen::VectorXd y = X * beta + noise * oracle::gaussian_vector(rng, n);
  return validate_dataset(X, y, Link::identity);
}

} // namespace

TEST_SUITE("penalized") {

TEST_CASE("lasso on an orthonormal penalized block matches the soft-threshold form") {
  CounterRng rng(11, 0);
  const Eigen::Index n = 64, p = 12;
  Eigen::MatrixXd X = orthonormal_design(rng, n, p);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  beta[0] = 1.5;
  beta[3] = -0.8;
  Eigen::VectorXd y = X * beta + 0.4 * oracle::gaussian_vector(rng, n);

  const Dataset data = validate_dataset(X, y, Link::identity);
  PenaltyConfig cfg;
  cfg.lambda0 = 0.2;
  const PenalizedFit fit = fit_lasso(data, cfg);

  CHECK(fit.beta[0] == doctest::Approx(y.mean()).epsilon(1e-10));
  for (Eigen::Index j = 0; j < p; ++j) {
    const double z = X.col(j).dot(y) / static_cast<double>(n);
    const double w = data.column_scales()[j + 1]; // == 1 on this design
    CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.beta[j + 1] == doctest::Approx(soft(z, 0.2 * w)).epsilon(1e-8));
  }
  CHECK(fit.kkt_residual <= 1e-6);
}

TEST_CASE("lasso at lambda 0 on a low-dimensional design is least squares") {
  const Dataset data = random_linear_data(21, 80, 10, 3);
  PenaltyConfig cfg;
  cfg.lambda0 = 0.0;
  const PenalizedFit fit = fit_lasso(data, cfg);
  const Eigen::VectorXd ols = oracle::ols(data.X(), data.y());
  CHECK((fit.beta - ols).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(fit.sigma_eps ==
        doctest::Approx((data.y() - data.X() * ols).norm() /
                        std::sqrt(static_cast<double>(data.n()))));
}

TEST_CASE("lasso beyond the null threshold keeps only the intercept") {
  const Dataset data = random_linear_data(22, 60, 15, 2);
  const double ybar = data.y().mean();
  double thr = 0.0;
  for (Eigen::Index j = 1; j < data.X().cols(); ++j) {
    const double g =
        std::abs(data.X().col(j).dot(
            (data.y() - Eigen::VectorXd::Constant(data.n(), ybar)).eval())) /
        static_cast<double>(data.n());
    thr = std::max(thr, g / data.column_scales()[j]);
  }
  PenaltyConfig cfg;
  cfg.lambda0 = thr * 1.0001;
  const PenalizedFit fit = fit_lasso(data, cfg);
  CHECK(fit.active_set.empty());
  CHECK(fit.beta[0] == doctest::Approx(ybar).epsilon(1e-10));
  CHECK(fit.beta.tail(data.p()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("lasso KKT residual, objective monotonicity, scale equivariance") {
  const Dataset data = random_linear_data(23, 100, 40, 4);
  PenaltyConfig cfg;
  cfg.lambda0 = 0.15;
  cfg.track_objective = true;
  const PenalizedFit fit = fit_lasso(data, cfg);
  CHECK(fit.kkt_residual <= 1e-6);
  for (std::size_t i = 1; i < fit.objective_trace.size(); ++i)
    CHECK(fit.objective_trace[i] <= fit.objective_trace[i - 1] + 1e-12);

  // sign condition at the active coordinates
  const Eigen::VectorXd r = data.y() - data.X() * fit.beta;
  for (int j : fit.active_set) {
    const double g = data.X().col(j).dot(r) / static_cast<double>(data.n());
    CHECK(g * (fit.beta[j] > 0 ? 1.0 : -1.0) ==
          doctest::Approx(0.15 * data.column_scales()[j]).epsilon(1e-5));
  }

  const double c = 37.5;
  const Dataset scaled =
      validate_dataset(data.X().rightCols(data.p()), c * data.y(), Link::identity);
  PenaltyConfig cfg_c;
  cfg_c.lambda0 = c * 0.15;
  const PenalizedFit fit_c = fit_lasso(scaled, cfg_c);
  CHECK((fit_c.beta - c * fit.beta).cwiseAbs().maxCoeff() < 1e-8 * c);
}

TEST_CASE("cross-validated lambda is deterministic in the fold seed") {
  const Dataset data = random_linear_data(29, 60, 8, 2);
  PenaltyConfig cfg;
  cfg.cv_folds = 5;
  cfg.cv_seed = 99;
  const PenalizedFit a = fit_lasso(data, cfg);
  const PenalizedFit b = fit_lasso(data, cfg);
  CHECK(a.lambda == b.lambda);
  CHECK(a.beta == b.beta);
}

TEST_CASE("scaled lasso reaches the joint fixed point") {
  const Dataset data = random_linear_data(31, 90, 30, 3);
  const PenalizedFit sl = fit_scaled_lasso(data);
  CHECK(sl.converged);
  CHECK(sl.sigma_eps ==
        doctest::Approx((data.y() - data.X() * sl.beta).norm() /
                        std::sqrt(static_cast<double>(data.n()))).epsilon(1e-6));
  // re-running the plain lasso at lambda0 * sigma reproduces beta
  PenaltyConfig cfg;
  cfg.lambda0 = sl.lambda;
  const PenalizedFit again = fit_lasso(data, cfg);
  CHECK((again.beta - sl.beta).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("scaled lasso on p = 1 matches a profiled grid search") {
  CounterRng rng(33, 0);
  const Eigen::Index n = 40;
  Eigen::MatrixXd x = oracle::gaussian_matrix(rng, n, 1);
  Eigen::VectorXd y = 0.9 * x.col(0) + 0.7 * oracle::gaussian_vector(rng, n);
  const Dataset data = validate_dataset(x, y, Link::identity);
  const double lambda0 = 0.3;
  PenaltyConfig cfg;
  cfg.lambda0 = lambda0;
  const PenalizedFit sl = fit_scaled_lasso(data, cfg);

  // profile the intercept analytically, grid over (slope, sigma)
  const double w1 = data.column_scales()[1];
  const double dn = static_cast<double>(n);
  auto objective = [&](double b, double sigma) {
    const Eigen::VectorXd r0 = y - b * x.col(0);
    const double a = r0.mean();
    const double rss = (r0.array() - a).square().sum();
    return rss / (2.0 * dn * sigma) + sigma / 2.0 + lambda0 * w1 * std::abs(b);
  };
  double best_b = 0.0, best_s = 1.0, best = 1e300;
  for (double b = -2.0; b <= 2.0; b += 1e-3) {
    for (double s = 0.2; s <= 2.0; s += 1e-3) {
      const double v = objective(b, s);
      if (v < best) {
        best = v;
        best_b = b;
        best_s = s;
      }
    }
  }
  CHECK(std::abs(sl.beta[1] - best_b) < 2e-3);
  CHECK(std::abs(sl.sigma_eps - best_s) < 2e-3);
}

TEST_CASE("scaled lasso flags the noise-free floor") {
  CounterRng rng(35, 0);
  const Eigen::Index n = 50;
  Eigen::MatrixXd X = oracle::gaussian_matrix(rng, n, 3);
  Eigen::VectorXd y = 2.0 * X.col(1); // exactly in the span
  const Dataset data = validate_dataset(X, y, Link::identity);
  const PenalizedFit sl = fit_scaled_lasso(data);
  CHECK(sl.sigma_floor_hit);
  CHECK(sl.sigma_eps <=
        1.0001e-6 * std::sqrt((y.array() - y.mean()).square().sum() / n));
}

TEST_CASE("logistic lasso: saturated penalty gives the intercept-only fit") {
  CounterRng rng(41, 0);
  const Eigen::Index n = 120, p = 10;
  Eigen::MatrixXd X = oracle::gaussian_matrix(rng, n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index k = 0; k < n; ++k) y[k] = rng.uniform() < 0.35 ? 1.0 : 0.0;
  const Dataset data = validate_dataset(X, y, Link::logistic);
  PenaltyConfig cfg;
  cfg.lambda0 = 10.0;
  const PenalizedFit fit = fit_logistic_lasso(data, cfg);
  CHECK(fit.beta.tail(p).cwiseAbs().maxCoeff() == 0.0);
  const double ybar = y.mean();
  CHECK(fit.beta[0] == doctest::Approx(std::log(ybar / (1.0 - ybar))).epsilon(1e-7));
}

TEST_CASE("logistic lasso at lambda 0 matches the Newton MLE") {
  CounterRng rng(43, 0);
  const Eigen::Index n = 250, p = 4;
  Eigen::MatrixXd X = oracle::gaussian_matrix(rng, n, p);
  Eigen::VectorXd beta_true(p + 1);
  beta_true << 0.2, 0.8, -0.5, 0.0, 0.3;
  Eigen::VectorXd y(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double eta = beta_true[0] + X.row(k).dot(beta_true.tail(p));
    y[k] = rng.uniform() < link_eval(Link::logistic, eta).value ? 1.0 : 0.0;
  }
  const Dataset data = validate_dataset(X, y, Link::logistic);
  PenaltyConfig cfg;
  cfg.lambda0 = 0.0;
  const PenalizedFit fit = fit_logistic_lasso(data, cfg);
  const Eigen::VectorXd mle = oracle::logistic_newton(data.X(), y);
  CHECK((fit.beta - mle).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(fit.kkt_residual <= 1e-6);
}

TEST_CASE("logistic lasso rejects a constant outcome") {
  CounterRng rng(45, 0);
  Eigen::MatrixXd X = oracle::gaussian_matrix(rng, 30, 3);
  Eigen::VectorXd y = Eigen::VectorXd::Ones(30);
  const Dataset data = validate_dataset(X, y, Link::logistic);
  CHECK_THROWS_AS(fit_logistic_lasso(data), invalid_input);
}

TEST_CASE("group lasso with one response coincides with the lasso") {
  const Dataset data = random_linear_data(51, 70, 12, 3);
  PenaltyConfig cfg;
  cfg.lambda0 = 0.12;
  const PenalizedFit lf = fit_lasso(data, cfg);
  const GroupFit gf = fit_group_lasso(data.X(), data.y(), cfg);
  CHECK((gf.B.col(0) - lf.beta).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("group lasso null threshold and block-orthonormal closed form") {
  CounterRng rng(53, 0);
  const Eigen::Index n = 80, p = 6, D = 3;
  Eigen::MatrixXd Xp = orthonormal_design(rng, n, p);
  Eigen::MatrixXd X(n, p + 1);
  X.col(0).setOnes();
  X.rightCols(p) = Xp;
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(p + 1, D);
  B.row(1) << 1.0, 1.2, 0.8;
  Eigen::MatrixXd Y = X * B;
  for (Eigen::Index d = 0; d < D; ++d)
    Y.col(d) += 0.5 * oracle::gaussian_vector(rng, n);

  // row-wise group soft-threshold on the orthonormal block
  PenaltyConfig cfg;
  cfg.lambda0 = 0.2;
  const GroupFit gf = fit_group_lasso(X, Y, cfg);
  Eigen::RowVectorXd ybar = Y.colwise().mean();
  for (Eigen::Index j = 1; j <= p; ++j) {
    Eigen::RowVectorXd z = X.col(j).transpose() * Y / static_cast<double>(n);
    const double zn = z.norm();
    Eigen::RowVectorXd expect =
        zn > 0.2 ? ((1.0 - 0.2 / zn) * z).eval() : Eigen::RowVectorXd::Zero(D).eval();
    CHECK((gf.B.row(j) - expect).cwiseAbs().maxCoeff() < 1e-7);
  }
  CHECK((gf.B.row(0) - ybar).cwiseAbs().maxCoeff() < 1e-7);

  // group-null threshold: all penalized rows vanish
  double thr = 0.0;
  Eigen::MatrixXd Yc = Y.rowwise() - ybar;
  for (Eigen::Index j = 1; j <= p; ++j)
    thr = std::max(thr, (X.col(j).transpose() * Yc).norm() / static_cast<double>(n));
  PenaltyConfig big;
  big.lambda0 = thr * 1.0001;
  const GroupFit null_fit = fit_group_lasso(X, Y, big);
  CHECK(null_fit.active_rows.empty());
}

TEST_CASE("fit serialization carries the documented fields") {
  const Dataset data = random_linear_data(55, 50, 6, 2);
  PenaltyConfig cfg;
  cfg.lambda0 = 0.1;
  const PenalizedFit fit = fit_lasso(data, cfg);
  const nlohmann::json j = fit_to_json(fit, Link::identity);
  CHECK(j["link"] == "identity");
  CHECK(j["beta"].size() == 7);
  CHECK(j.contains("sigma_eps"));
  CHECK(j.contains("lambda"));
  CHECK(j.contains("active_set"));
  CHECK(j.contains("kkt_residual"));
}

} // TEST_SUITE
