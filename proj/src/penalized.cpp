#include "hdi/penalized.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hdi/rng.hpp"

namespace hdi {

namespace detail {

double default_rate(Eigen::Index n, Eigen::Index p) {
  const double pp = static_cast<double>(std::max<Eigen::Index>(p, 2));
  return 1.1 * std::sqrt(2.0 * std::log(pp) / static_cast<double>(n));
}

namespace {

inline double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

} // namespace

CdResult lasso_cd(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  const Eigen::VectorXd* obs_weights, double lambda,
                  const Eigen::VectorXd& col_weights, const Eigen::VectorXd& beta0,
                  double tol, int max_sweeps, double kkt_tol, bool trace) {
  const Eigen::Index n = X.rows();
  const Eigen::Index m = X.cols();
  const double dn = static_cast<double>(n);
  const bool weighted = obs_weights != nullptr;

  CdResult out;
  out.beta = beta0.size() == m ? beta0 : Eigen::VectorXd::Zero(m);

  // q_j = X_j' D X_j / n
  Eigen::VectorXd q(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    if (weighted)
      q[j] = X.col(j).cwiseAbs2().dot(*obs_weights) / dn;
    else
      q[j] = X.col(j).squaredNorm() / dn;
  }

  Eigen::VectorXd r = y - X * out.beta;
  Eigen::VectorXd rw = weighted ? obs_weights->cwiseProduct(r).eval() : Eigen::VectorXd();

  auto refresh_residual = [&]() {
    r = y - X * out.beta;
    if (weighted) rw = obs_weights->cwiseProduct(r);
  };

  auto update_coord = [&](Eigen::Index j) -> double {
    if (q[j] <= 0.0) return 0.0;
    const double g = (weighted ? X.col(j).dot(rw) : X.col(j).dot(r)) / dn;
    const double z = g + q[j] * out.beta[j];
    double bn;
    if (col_weights[j] == 0.0)
      bn = z / q[j];
    else
      bn = soft_threshold(z, lambda * col_weights[j]) / q[j];
    const double delta = bn - out.beta[j];
    if (delta != 0.0) {
      out.beta[j] = bn;
      r.noalias() -= delta * X.col(j);
      if (weighted) rw.noalias() -= delta * obs_weights->cwiseProduct(X.col(j));
    }
    return std::abs(delta);
  };

  auto kkt_residual = [&]() -> double {
    refresh_residual();
    double worst = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      const double g = (weighted ? X.col(j).dot(rw) : X.col(j).dot(r)) / dn;
      double viol;
      if (col_weights[j] == 0.0)
        viol = q[j] > 0.0 ? std::abs(g) : 0.0;
      else if (out.beta[j] != 0.0)
        viol = std::abs(g - lambda * col_weights[j] * (out.beta[j] > 0 ? 1.0 : -1.0));
      else
        viol = std::max(0.0, std::abs(g) - lambda * col_weights[j]);
      worst = std::max(worst, viol);
    }
    return worst;
  };

  auto objective = [&]() -> double {
    double rss = weighted ? r.cwiseProduct(rw).sum() : r.squaredNorm();
    double pen = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) pen += col_weights[j] * std::abs(out.beta[j]);
    return rss / (2.0 * dn) + lambda * pen;
  };

  int sweeps = 0;
  while (sweeps < max_sweeps) {
    double maxchg = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) maxchg = std::max(maxchg, update_coord(j));
    ++sweeps;
    if (trace) out.objective_trace.push_back(objective());

    if (maxchg > tol) {
      // iterate on the active set until it stabilizes
      std::vector<Eigen::Index> active;
      for (Eigen::Index j = 0; j < m; ++j)
        if (out.beta[j] != 0.0 || col_weights[j] == 0.0) active.push_back(j);
      double achg = maxchg;
      while (achg > tol && sweeps < max_sweeps) {
        achg = 0.0;
        for (Eigen::Index j : active) achg = std::max(achg, update_coord(j));
        ++sweeps;
      }
      continue;
    }

    out.kkt_residual = kkt_residual();
    if (out.kkt_residual <= kkt_tol) {
      out.converged = true;
      break;
    }
    if (maxchg == 0.0) break; // stalled at machine precision
  }
  if (!out.converged) out.kkt_residual = kkt_residual();
  out.sweeps = sweeps;
  return out;
}

GramLassoFit fit_lasso_gram(const Eigen::MatrixXd& G, int response,
                            const std::vector<int>& design,
                            const Eigen::VectorXd& col_weights, double lambda,
                            double tol, int max_sweeps, double kkt_tol) {
  const int d = static_cast<int>(design.size());
  GramLassoFit out;
  out.gamma = Eigen::VectorXd::Zero(d);

  Eigen::VectorXd c(d), q(d);
  for (int j = 0; j < d; ++j) {
    c[j] = G(design[j], response);
    q[j] = G(design[j], design[j]);
  }
  Eigen::VectorXd grad = c; // c - G_dd * gamma

  auto refresh_grad = [&]() {
    grad = c;
    for (int l = 0; l < d; ++l) {
      if (out.gamma[l] == 0.0) continue;
      const double gl = out.gamma[l];
      for (int j = 0; j < d; ++j) grad[j] -= gl * G(design[j], design[l]);
    }
  };

  auto update_coord = [&](int j) -> double {
    if (q[j] <= 0.0) return 0.0;
    const double z = grad[j] + q[j] * out.gamma[j];
    double gn;
    if (col_weights[j] == 0.0)
      gn = z / q[j];
    else
      gn = soft_threshold(z, lambda * col_weights[j]) / q[j];
    const double delta = gn - out.gamma[j];
    if (delta != 0.0) {
      out.gamma[j] = gn;
      for (int l = 0; l < d; ++l) grad[l] -= delta * G(design[l], design[j]);
    }
    return std::abs(delta);
  };

  auto kkt_residual = [&]() -> double {
    refresh_grad();
    double worst = 0.0;
    for (int j = 0; j < d; ++j) {
      double viol;
      if (col_weights[j] == 0.0)
        viol = q[j] > 0.0 ? std::abs(grad[j]) : 0.0;
      else if (out.gamma[j] != 0.0)
        viol = std::abs(grad[j] - lambda * col_weights[j] * (out.gamma[j] > 0 ? 1.0 : -1.0));
      else
        viol = std::max(0.0, std::abs(grad[j]) - lambda * col_weights[j]);
      worst = std::max(worst, viol);
    }
    return worst;
  };

  int sweeps = 0;
  while (sweeps < max_sweeps) {
    double maxchg = 0.0;
    for (int j = 0; j < d; ++j) maxchg = std::max(maxchg, update_coord(j));
    ++sweeps;
    if (maxchg > tol) {
      std::vector<int> active;
      for (int j = 0; j < d; ++j)
        if (out.gamma[j] != 0.0 || col_weights[j] == 0.0) active.push_back(j);
      double achg = maxchg;
      while (achg > tol && sweeps < max_sweeps) {
        achg = 0.0;
        for (int j : active) achg = std::max(achg, update_coord(j));
        ++sweeps;
      }
      continue;
    }
    out.kkt_residual = kkt_residual();
    if (out.kkt_residual <= kkt_tol) {
      out.converged = true;
      break;
    }
    if (maxchg == 0.0) break;
  }
  if (!out.converged) out.kkt_residual = kkt_residual();
  out.sweeps = sweeps;

  // residual variance from the Gram identities
  double quad = 0.0, cross = 0.0;
  for (int l = 0; l < d; ++l) {
    if (out.gamma[l] == 0.0) continue;
    cross += out.gamma[l] * c[l];
    for (int j = 0; j < d; ++j) {
      if (out.gamma[j] == 0.0) continue;
      quad += out.gamma[l] * out.gamma[j] * G(design[l], design[j]);
    }
  }
  out.resid_var = std::max(0.0, G(response, response) - 2.0 * cross + quad);
  return out;
}

} // namespace detail

namespace {

Eigen::VectorXd resolve_weights(const Dataset& data, const PenaltyConfig& config) {
  Eigen::VectorXd w;
  if (config.weights) {
    if (config.weights->size() != data.X().cols())
      throw invalid_input("PenaltyConfig.weights has wrong length");
    if ((config.weights->array() < 0.0).any())
      throw invalid_input("PenaltyConfig.weights must be nonnegative");
    w = *config.weights;
  } else {
    w = data.column_scales();
  }
  w[0] = 0.0; // intercept is never penalized
  return w;
}

std::vector<int> penalized_support(const Eigen::VectorXd& beta,
                                   const Eigen::VectorXd& col_weights) {
  std::vector<int> active;
  for (Eigen::Index j = 0; j < beta.size(); ++j)
    if (col_weights[j] > 0.0 && beta[j] != 0.0) active.push_back(static_cast<int>(j));
  return active;
}

double sd_of(const Eigen::VectorXd& y) {
  const double mean = y.mean();
  return std::sqrt((y.array() - mean).square().sum() / static_cast<double>(y.size()));
}

std::vector<int> cv_fold_assignment(Eigen::Index n, int folds, std::uint64_t seed) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  CounterRng rng(seed, /*stream=*/0xCF01);
  for (Eigen::Index i = n - 1; i > 0; --i)
    std::swap(idx[i], idx[rng.below(static_cast<std::uint64_t>(i + 1))]);
  std::vector<int> fold(n);
  for (Eigen::Index pos = 0; pos < n; ++pos) fold[idx[pos]] = static_cast<int>(pos % folds);
  return fold;
}

std::vector<double> lambda_grid(double lambda_max, int count = 50, double ratio = 1e-3) {
  std::vector<double> grid(count);
  const double step = std::log(ratio) / (count - 1);
  for (int i = 0; i < count; ++i) grid[i] = lambda_max * std::exp(step * i);
  return grid;
}

// logistic negative log-likelihood (mean scale), overflow-safe
double logistic_nll(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < eta.size(); ++k) {
    const double e = eta[k];
    const double lse = e > 0.0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
    acc += lse - y[k] * e;
  }
  return acc / static_cast<double>(eta.size());
}

struct LogisticStep {
  Eigen::VectorXd beta;
  double kkt = 0.0;
  bool converged = false;
  int sweeps = 0;
};

LogisticStep logistic_irls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           double lambda, const Eigen::VectorXd& col_w,
                           const Eigen::VectorXd& beta_init, double tol, int max_outer,
                           double kkt_tol, std::vector<double>* trace) {
  const Eigen::Index n = X.rows();
  const double dn = static_cast<double>(n);
  LogisticStep st;
  st.beta = beta_init;

  auto penalty = [&](const Eigen::VectorXd& b) {
    double pen = 0.0;
    for (Eigen::Index j = 0; j < b.size(); ++j) pen += col_w[j] * std::abs(b[j]);
    return lambda * pen;
  };
  auto objective = [&](const Eigen::VectorXd& b) {
    return logistic_nll(X * b, y) + penalty(b);
  };

  double obj = objective(st.beta);
  if (trace) trace->push_back(obj);

  Eigen::VectorXd eta(n), h(n), hp(n), z(n), omega(n);
  for (int outer = 0; outer < max_outer; ++outer) {
    eta = X * st.beta;
    if (lambda == 0.0 && eta.cwiseAbs().maxCoeff() > 30.0)
      throw solver_error("logistic fit diverging at lambda0 = 0 "
                         "(complete separation suspected); use lambda0 > 0");
    for (Eigen::Index k = 0; k < n; ++k) {
      const LinkValues lv = link_eval(Link::logistic, eta[k]);
      h[k] = lv.value;
      hp[k] = lv.d1;
      omega[k] = std::max(lv.d1, 1e-10);
      z[k] = eta[k] + (y[k] - h[k]) / omega[k];
    }
    detail::CdResult inner =
        detail::lasso_cd(X, z, &omega, lambda, col_w, st.beta, std::max(tol, 1e-9),
                         20000, 1e-10, false);
    Eigen::VectorXd cand = inner.beta;
    double cand_obj = objective(cand);
    int halvings = 0;
    while (cand_obj > obj + 1e-12 * (1.0 + std::abs(obj)) && halvings < 40) {
      cand = 0.5 * (cand + st.beta);
      cand_obj = objective(cand);
      ++halvings;
    }
    const double maxchg = (cand - st.beta).cwiseAbs().maxCoeff();
    st.beta = cand;
    obj = cand_obj;
    st.sweeps += inner.sweeps;
    if (trace) trace->push_back(obj);

    if (maxchg <= tol) {
      // logistic KKT with residual y - h(X beta)
      eta = X * st.beta;
      Eigen::VectorXd res(n);
      for (Eigen::Index k = 0; k < n; ++k)
        res[k] = y[k] - link_eval(Link::logistic, eta[k]).value;
      double worst = 0.0;
      for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const double g = X.col(j).dot(res) / dn;
        double viol;
        if (col_w[j] == 0.0)
          viol = std::abs(g);
        else if (st.beta[j] != 0.0)
          viol = std::abs(g - lambda * col_w[j] * (st.beta[j] > 0 ? 1.0 : -1.0));
        else
          viol = std::max(0.0, std::abs(g) - lambda * col_w[j]);
        worst = std::max(worst, viol);
      }
      st.kkt = worst;
      if (worst <= kkt_tol) {
        st.converged = true;
        return st;
      }
    }
  }
  return st;
}

double cv_select_lambda(const Dataset& data, const PenaltyConfig& config,
                        const Eigen::VectorXd& col_w, bool logistic) {
  const Eigen::MatrixXd& X = data.X();
  const Eigen::VectorXd& y = data.y();
  const Eigen::Index n = X.rows();
  const double dn = static_cast<double>(n);

  double lambda_max = 0.0;
  const double ybar = y.mean();
  for (Eigen::Index j = 1; j < X.cols(); ++j) {
    if (col_w[j] <= 0.0) continue;
    const double g = std::abs(X.col(j).dot(y - Eigen::VectorXd::Constant(n, ybar))) / dn;
    lambda_max = std::max(lambda_max, g / col_w[j]);
  }
  if (lambda_max <= 0.0) return 0.0;

  const auto grid = lambda_grid(lambda_max);
  const auto fold = cv_fold_assignment(n, config.cv_folds, config.cv_seed);

  std::vector<double> cv_err(grid.size(), 0.0);
  for (int f = 0; f < config.cv_folds; ++f) {
    std::vector<Eigen::Index> tr, va;
    for (Eigen::Index i = 0; i < n; ++i) (fold[i] == f ? va : tr).push_back(i);
    if (va.empty() || tr.size() < 2) continue;
    Eigen::MatrixXd Xtr(tr.size(), X.cols()), Xva(va.size(), X.cols());
    Eigen::VectorXd ytr(tr.size()), yva(va.size());
    for (std::size_t i = 0; i < tr.size(); ++i) {
      Xtr.row(i) = X.row(tr[i]);
      ytr[i] = y[tr[i]];
    }
    for (std::size_t i = 0; i < va.size(); ++i) {
      Xva.row(i) = X.row(va[i]);
      yva[i] = y[va[i]];
    }
    Eigen::VectorXd warm = Eigen::VectorXd::Zero(X.cols());
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
      if (logistic) {
        auto st = logistic_irls(Xtr, ytr, grid[gi], col_w, warm, 1e-6, 50, 1e-6, nullptr);
        warm = st.beta;
        cv_err[gi] += logistic_nll(Xva * st.beta, yva) * static_cast<double>(va.size());
      } else {
        auto cd = detail::lasso_cd(Xtr, ytr, nullptr, grid[gi], col_w, warm, 1e-7, 20000,
                                   1e-8, false);
        warm = cd.beta;
        cv_err[gi] += (yva - Xva * cd.beta).squaredNorm();
      }
    }
  }
  // minimum-CV rule; ties broken toward the larger (sparser) lambda
  std::size_t best = 0;
  for (std::size_t gi = 1; gi < grid.size(); ++gi)
    if (cv_err[gi] < cv_err[best]) best = gi;
  return grid[best];
}

} // namespace

PenalizedFit fit_lasso(const Dataset& data, const PenaltyConfig& config) {
  if (data.link() != Link::identity)
    throw invalid_input("fit_lasso requires the identity link");
  const Eigen::VectorXd col_w = resolve_weights(data, config);
  const Eigen::Index n = data.n();
  const double dn = static_cast<double>(n);

  double lambda;
  Eigen::VectorXd warm = Eigen::VectorXd::Zero(data.X().cols());
  if (config.lambda0) {
    if (*config.lambda0 < 0.0) throw invalid_input("lambda0 must be nonnegative");
    lambda = *config.lambda0;
  } else if (config.cv_folds > 0) {
    lambda = cv_select_lambda(data, config, col_w, false);
  } else {
    PenaltyConfig pre = config;
    pre.track_objective = false;
    PenalizedFit prelim = fit_scaled_lasso(data, pre);
    lambda = detail::default_rate(n, data.p()) * prelim.sigma_eps;
    warm = prelim.beta;
  }

  const double kkt_tol = 1e-8 * (1.0 + sd_of(data.y()));
  detail::CdResult cd = detail::lasso_cd(data.X(), data.y(), nullptr, lambda, col_w, warm,
                                         config.tol, config.max_iter, kkt_tol,
                                         config.track_objective);
  PenalizedFit fit;
  fit.beta = cd.beta;
  fit.lambda = lambda;
  fit.kkt_residual = cd.kkt_residual;
  fit.converged = cd.converged;
  fit.sweeps = cd.sweeps;
  fit.objective_trace = std::move(cd.objective_trace);
  fit.sigma_eps = (data.y() - data.X() * fit.beta).norm() / std::sqrt(dn);
  fit.active_set = penalized_support(fit.beta, col_w);
  if (!fit.converged)
    throw solver_error("fit_lasso did not converge within max_iter sweeps "
                       "(kkt_residual = " + std::to_string(fit.kkt_residual) + ")");
  return fit;
}

PenalizedFit fit_scaled_lasso(const Dataset& data, const PenaltyConfig& config) {
  if (data.link() != Link::identity)
    throw invalid_input("fit_scaled_lasso requires the identity link");
  const Eigen::VectorXd col_w = resolve_weights(data, config);
  const Eigen::Index n = data.n();
  const double dn = static_cast<double>(n);

  const double lambda0 =
      config.lambda0 ? *config.lambda0 : detail::default_rate(n, data.p());
  if (lambda0 < 0.0) throw invalid_input("lambda0 must be nonnegative");

  const double sd_y = sd_of(data.y());
  const double sigma_floor = 1e-6 * (sd_y > 0.0 ? sd_y : 1.0);
  const double kkt_tol = 1e-8 * (1.0 + sd_y);

  PenalizedFit fit;
  fit.beta = Eigen::VectorXd::Zero(data.X().cols());
  double sigma = std::max(sd_y, sigma_floor);
  bool alternation_converged = false;
  detail::CdResult cd;
  for (int it = 0; it < 500; ++it) {
    cd = detail::lasso_cd(data.X(), data.y(), nullptr, lambda0 * sigma, col_w, fit.beta,
                          config.tol, config.max_iter, kkt_tol, false);
    fit.beta = cd.beta;
    fit.sweeps += cd.sweeps;
    const double rn = (data.y() - data.X() * fit.beta).norm() / std::sqrt(dn);
    double sigma_new = rn;
    if (sigma_new < sigma_floor) {
      sigma_new = sigma_floor;
      fit.sigma_floor_hit = true;
    }
    if (config.track_objective) {
      const double rss = rn * rn;
      double pen = 0.0;
      for (Eigen::Index j = 0; j < fit.beta.size(); ++j)
        pen += col_w[j] * std::abs(fit.beta[j]);
      fit.objective_trace.push_back(rss / (2.0 * sigma_new) + sigma_new / 2.0 +
                                    lambda0 * pen);
    }
    if (std::abs(sigma_new - sigma) <= 1e-10 * (1.0 + sigma_new)) {
      sigma = sigma_new;
      alternation_converged = true;
      break;
    }
    sigma = sigma_new;
  }
  fit.sigma_eps = sigma;
  fit.lambda = lambda0 * sigma;
  fit.kkt_residual = cd.kkt_residual;
  fit.converged = alternation_converged && cd.converged;
  fit.active_set = penalized_support(fit.beta, col_w);
  if (!fit.converged)
    throw solver_error("fit_scaled_lasso alternation did not converge");
  return fit;
}

PenalizedFit fit_logistic_lasso(const Dataset& data, const PenaltyConfig& config) {
  if (data.link() != Link::logistic)
    throw invalid_input("fit_logistic_lasso requires the logistic link");
  const Eigen::VectorXd col_w = resolve_weights(data, config);
  const Eigen::Index n = data.n();
  const double ybar = data.y().mean();
  if (ybar == 0.0 || ybar == 1.0)
    throw invalid_input("fit_logistic_lasso: outcome is constant; "
                        "the intercept-only likelihood has no maximizer");

  double lambda;
  if (config.lambda0) {
    if (*config.lambda0 < 0.0) throw invalid_input("lambda0 must be nonnegative");
    lambda = *config.lambda0;
  } else if (config.cv_folds > 0) {
    lambda = cv_select_lambda(data, config, col_w, true);
  } else {
    lambda = detail::default_rate(n, data.p());
  }

  Eigen::VectorXd beta0 = Eigen::VectorXd::Zero(data.X().cols());
  beta0[0] = std::log(ybar / (1.0 - ybar));

  PenalizedFit fit;
  std::vector<double> trace;
  LogisticStep st = logistic_irls(data.X(), data.y(), lambda, col_w, beta0, config.tol,
                                  100, 1e-8,
                                  config.track_objective ? &trace : nullptr);
  fit.beta = st.beta;
  fit.lambda = lambda;
  fit.kkt_residual = st.kkt;
  fit.converged = st.converged;
  fit.sweeps = st.sweeps;
  fit.objective_trace = std::move(trace);
  fit.active_set = penalized_support(fit.beta, col_w);
  if (!fit.converged)
    throw solver_error("fit_logistic_lasso did not converge "
                       "(kkt_residual = " + std::to_string(fit.kkt_residual) + ")");
  return fit;
}

GroupFit fit_group_lasso(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                         const PenaltyConfig& config) {
  const Eigen::Index n = X.rows();
  const Eigen::Index m = X.cols();
  const Eigen::Index D = Y.cols();
  if (Y.rows() != n) throw invalid_input("fit_group_lasso: X and Y row mismatch");
  if (D < 1) throw invalid_input("fit_group_lasso: need D >= 1 responses");
  if ((X.col(0).array() != 1.0).any())
    throw invalid_input("fit_group_lasso: column 1 of X must be the intercept");
  const double dn = static_cast<double>(n);

  Eigen::VectorXd col_w(m);
  col_w[0] = 0.0;
  for (Eigen::Index j = 1; j < m; ++j) col_w[j] = X.col(j).norm() / std::sqrt(dn);

  double lambda;
  if (config.lambda0) {
    lambda = *config.lambda0;
  } else {
    // preliminary per-response scaled-lasso pass for the noise scale
    double s2 = 0.0;
    for (Eigen::Index d = 0; d < D; ++d) {
      Dataset dd = validate_dataset(X.rightCols(m - 1), Y.col(d), Link::identity);
      PenaltyConfig pre;
      pre.tol = config.tol;
      const double s = fit_scaled_lasso(dd, pre).sigma_eps;
      s2 += s * s;
    }
    lambda = detail::default_rate(n, m - 1) * std::sqrt(s2 / static_cast<double>(D));
  }

  GroupFit fit;
  fit.lambda = lambda;
  fit.B = Eigen::MatrixXd::Zero(m, D);
  Eigen::MatrixXd R = Y;
  Eigen::VectorXd q(m);
  for (Eigen::Index j = 0; j < m; ++j) q[j] = X.col(j).squaredNorm() / dn;

  const double kkt_tol = 1e-8 * (1.0 + std::sqrt(Y.squaredNorm() / (dn * D)));

  auto update_row = [&](Eigen::Index j) -> double {
    if (q[j] <= 0.0) return 0.0;
    Eigen::RowVectorXd z = X.col(j).transpose() * R / dn + q[j] * fit.B.row(j);
    Eigen::RowVectorXd bn;
    if (col_w[j] == 0.0) {
      bn = z / q[j];
    } else {
      const double t = lambda * col_w[j];
      const double zn = z.norm();
      bn = zn > t ? ((1.0 - t / zn) / q[j]) * z : Eigen::RowVectorXd::Zero(D).eval();
    }
    const double chg = (bn - fit.B.row(j)).cwiseAbs().maxCoeff();
    if (chg > 0.0) {
      R.noalias() -= X.col(j) * (bn - fit.B.row(j));
      fit.B.row(j) = bn;
    }
    return chg;
  };

  auto kkt_residual = [&]() -> double {
    R = Y - X * fit.B;
    double worst = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      Eigen::RowVectorXd g = X.col(j).transpose() * R / dn;
      double viol;
      if (col_w[j] == 0.0)
        viol = g.norm();
      else if (fit.B.row(j).norm() > 0.0)
        viol = (g - lambda * col_w[j] * fit.B.row(j) / fit.B.row(j).norm()).norm();
      else
        viol = std::max(0.0, g.norm() - lambda * col_w[j]);
      worst = std::max(worst, viol);
    }
    return worst;
  };

  int sweeps = 0;
  while (sweeps < config.max_iter) {
    double maxchg = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) maxchg = std::max(maxchg, update_row(j));
    ++sweeps;
    if (maxchg > config.tol) continue;
    fit.kkt_residual = kkt_residual();
    if (fit.kkt_residual <= kkt_tol) {
      fit.converged = true;
      break;
    }
    if (maxchg == 0.0) break;
  }
  if (!fit.converged) fit.kkt_residual = kkt_residual();
  fit.sweeps = sweeps;
  R = Y - X * fit.B;
  fit.sigma_eps = std::sqrt(R.squaredNorm() / (dn * static_cast<double>(D)));
  for (Eigen::Index j = 1; j < m; ++j)
    if (fit.B.row(j).cwiseAbs().maxCoeff() > 0.0)
      fit.active_rows.push_back(static_cast<int>(j));
  if (!fit.converged) throw solver_error("fit_group_lasso did not converge");
  return fit;
}

nlohmann::json fit_to_json(const PenalizedFit& fit, Link link) {
  nlohmann::json j;
  j["link"] = link_name(link);
  j["beta"] = std::vector<double>(fit.beta.data(), fit.beta.data() + fit.beta.size());
  j["sigma_eps"] = fit.sigma_eps;
  j["lambda"] = fit.lambda;
  j["active_set"] = fit.active_set;
  j["kkt_residual"] = fit.kkt_residual;
  return j;
}

} // namespace hdi
