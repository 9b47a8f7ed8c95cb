#include "hdi/multiple_testing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hdi/stats.hpp"

namespace hdi {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Inverse-regression pass over one sample: for each covariate i, lasso of
// X_i on (intercept, centered outcome, remaining covariates) over the shared
// pool Gram, then the bias-corrected residual covariance with eps_hat.
struct InversePass {
  Eigen::VectorXd r_hat, sigma2, T, theta;
  std::vector<unsigned char> valid;
  double sigma_eps2 = 0.0;
};

InversePass inverse_regression_pass(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                    const Eigen::VectorXd& beta, double sigma_eps2,
                                    double lambda_inner,
                                    std::vector<std::string>* warnings) {
  const Eigen::Index n = X.rows();
  const Eigen::Index m = X.cols();
  const Eigen::Index p = m - 1;
  const double dn = static_cast<double>(n);

  // pool: [X | y - ybar]; Gram and eps cross-moments computed once
  Eigen::MatrixXd P(n, m + 1);
  P.leftCols(m) = X;
  P.col(m) = y.array() - y.mean();
  const Eigen::MatrixXd G = (P.transpose() * P) / dn;
  const Eigen::VectorXd eps = y - X * beta;
  const Eigen::VectorXd t_eps = P.transpose() * eps / dn;

  InversePass out;
  out.r_hat = Eigen::VectorXd::Constant(p, kNaN);
  out.sigma2 = Eigen::VectorXd::Constant(p, kNaN);
  out.T = Eigen::VectorXd::Constant(p, kNaN);
  out.theta = Eigen::VectorXd::Constant(p, kNaN);
  out.valid.assign(p, 0);
  out.sigma_eps2 = sigma_eps2;

  std::vector<int> design(m);        // intercept, yc, covariates != i
  Eigen::VectorXd weights(m);
  for (Eigen::Index i = 1; i < m; ++i) {
    int d = 0;
    design[d] = 0;
    weights[d++] = 0.0; // intercept unpenalized
    design[d] = static_cast<int>(m);
    weights[d++] = std::sqrt(std::max(G(m, m), 0.0));
    for (Eigen::Index j = 1; j < m; ++j) {
      if (j == i) continue;
      design[d] = static_cast<int>(j);
      weights[d++] = std::sqrt(std::max(G(j, j), 0.0));
    }

    const auto gl = detail::fit_lasso_gram(G, static_cast<int>(i), design, weights,
                                           lambda_inner);
    if (!gl.converged || gl.resid_var <= 1e-12 * std::max(G(i, i), 1e-300)) {
      if (warnings)
        warnings->push_back("inverse regression for covariate " + std::to_string(i) +
                            " failed; statistic excluded");
      continue;
    }
    double r_tilde = t_eps[i];
    for (int j = 0; j < d; ++j) r_tilde -= gl.gamma[j] * t_eps[design[j]];
    const double gamma_y = gl.gamma[1]; // coefficient on the centered outcome
    const double s2 = gl.resid_var;
    const double rh = r_tilde + sigma_eps2 * gamma_y + s2 * beta[i];

    out.r_hat[i - 1] = rh;
    out.sigma2[i - 1] = s2;
    out.T[i - 1] = rh / s2;
    out.theta[i - 1] = (sigma_eps2 / s2 + beta[i] * beta[i]) / dn;
    out.valid[i - 1] = 1;
  }
  return out;
}

double resolve_inner_lambda(const MtOptions& opt, Eigen::Index n, Eigen::Index p) {
  return opt.inner_lambda ? *opt.inner_lambda : detail::default_rate(n, p);
}

} // namespace

TestStatisticSet one_sample_stats(const Dataset& data, const MtOptions& opt) {
  if (data.link() != Link::identity)
    throw invalid_input("one_sample_stats requires the identity link");
  const Eigen::Index p = data.p();
  PenalizedFit fit = opt.precomputed_fit ? *opt.precomputed_fit
                                         : fit_lasso(data, opt.outer_fit);
  const double s2e = fit.sigma_eps * fit.sigma_eps;

  TestStatisticSet out;
  out.family = NullFamily::std_normal_folded;
  auto pass = inverse_regression_pass(data.X(), data.y(), fit.beta, s2e,
                                      resolve_inner_lambda(opt, data.n(), p),
                                      &out.warnings);
  out.W = Eigen::VectorXd::Constant(p, kNaN);
  for (Eigen::Index i = 0; i < p; ++i) {
    if (!pass.valid[i]) continue;
    out.W[i] = pass.r_hat[i] /
               std::sqrt(s2e * pass.sigma2[i] / static_cast<double>(data.n()));
  }
  out.valid = pass.valid;
  out.r_hat = pass.r_hat;
  out.sigma2 = pass.sigma2;
  out.theta = pass.theta;
  return out;
}

TestStatisticSet two_sample_stats(const Dataset& data1, const Dataset& data2,
                                  const MtOptions& opt) {
  if (data1.link() != Link::identity || data2.link() != Link::identity)
    throw invalid_input("two_sample_stats requires the identity link");
  if (data1.p() != data2.p())
    throw invalid_input("two_sample_stats: samples must share p");
  const Eigen::Index p = data1.p();

  TestStatisticSet out;
  out.family = NullFamily::std_normal_folded;
  const double ratio = static_cast<double>(data1.n()) / static_cast<double>(data2.n());
  if (ratio < 0.2 || ratio > 5.0)
    out.warnings.push_back("sample sizes are strongly unbalanced (n1/n2 = " +
                           std::to_string(ratio) + ")");

  PenalizedFit fit1 = opt.precomputed_fit ? *opt.precomputed_fit
                                          : fit_lasso(data1, opt.outer_fit);
  PenalizedFit fit2 = opt.precomputed_fit2 ? *opt.precomputed_fit2
                                           : fit_lasso(data2, opt.outer_fit);

  auto pass1 = inverse_regression_pass(data1.X(), data1.y(), fit1.beta,
                                       fit1.sigma_eps * fit1.sigma_eps,
                                       resolve_inner_lambda(opt, data1.n(), p),
                                       &out.warnings);
  auto pass2 = inverse_regression_pass(data2.X(), data2.y(), fit2.beta,
                                       fit2.sigma_eps * fit2.sigma_eps,
                                       resolve_inner_lambda(opt, data2.n(), p),
                                       &out.warnings);

  out.W = Eigen::VectorXd::Constant(p, kNaN);
  Eigen::VectorXd S = Eigen::VectorXd::Constant(p, kNaN);
  out.valid.assign(p, 0);
  for (Eigen::Index i = 0; i < p; ++i) {
    if (!pass1.valid[i] || !pass2.valid[i]) continue;
    const double th1 = pass1.theta[i], th2 = pass2.theta[i];
    if (!(th1 > 0.0) || !(th2 > 0.0)) continue;
    out.W[i] = (pass1.T[i] - pass2.T[i]) / std::sqrt(th1 + th2);
    const double rr = th1 / th2;
    S[i] = (pass1.T[i] + rr * pass2.T[i]) / std::sqrt(th1 * (1.0 + rr));
    out.valid[i] = 1;
  }
  out.S = std::move(S);
  out.r_hat = pass1.r_hat;
  out.sigma2 = pass1.sigma2;
  out.theta = pass1.theta;
  return out;
}

TestStatisticSet multivariate_stats(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                    const GroupFit& fit, const MtOptions& opt) {
  const Eigen::Index p = X.cols() - 1;
  const Eigen::Index D = Y.cols();
  if (fit.B.rows() != X.cols() || fit.B.cols() != D)
    throw invalid_input("multivariate_stats: group fit does not match X/Y");

  TestStatisticSet out;
  out.family = NullFamily::chi_square;
  out.chi_df = static_cast<int>(D);
  const double s2e = fit.sigma_eps * fit.sigma_eps; // pooled across responses

  out.W = Eigen::VectorXd::Zero(p);
  out.valid.assign(p, 1);
  for (Eigen::Index d = 0; d < D; ++d) {
    auto pass = inverse_regression_pass(X, Y.col(d), fit.B.col(d), s2e,
                                        resolve_inner_lambda(opt, X.rows(), p),
                                        &out.warnings);
    for (Eigen::Index i = 0; i < p; ++i) {
      if (!pass.valid[i] || !(pass.theta[i] > 0.0)) {
        out.valid[i] = 0;
        continue;
      }
      const double t_std = pass.T[i] / std::sqrt(pass.theta[i]);
      out.W[i] += t_std * t_std;
    }
    if (d == 0) {
      out.r_hat = pass.r_hat;
      out.sigma2 = pass.sigma2;
      out.theta = pass.theta;
    }
  }
  for (Eigen::Index i = 0; i < p; ++i)
    if (!out.valid[i]) out.W[i] = kNaN;
  return out;
}

TestStatisticSet logistic_stats(const Dataset& data, const MtOptions& opt) {
  if (data.link() != Link::logistic)
    throw invalid_input("logistic_stats requires the logistic link");
  const Eigen::MatrixXd& X = data.X();
  const Eigen::Index n = data.n();
  const Eigen::Index m = X.cols();
  const Eigen::Index p = m - 1;
  const double dn = static_cast<double>(n);

  PenalizedFit fit = opt.precomputed_fit ? *opt.precomputed_fit
                                         : fit_logistic_lasso(data, opt.outer_fit);

  Eigen::VectorXd eta = X * fit.beta;
  Eigen::VectorXd hp(n), res(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const LinkValues lv = link_eval(Link::logistic, eta[k]);
    hp[k] = std::max(lv.d1, 1e-300);
    res[k] = data.y()[k] - lv.value;
  }

  // node-wise lasso of X_i on X_{-i} under the linearization weights:
  // all regressions share the weighted Gram X' diag(h') X / n
  const Eigen::MatrixXd Gw = (X.transpose() * hp.asDiagonal() * X) / dn;
  const Eigen::VectorXd c_res = X.transpose() * res / dn;

  TestStatisticSet out;
  out.family = NullFamily::std_normal_folded;
  out.W = Eigen::VectorXd::Constant(p, kNaN);
  out.r_hat = Eigen::VectorXd::Constant(p, kNaN);
  out.sigma2 = Eigen::VectorXd::Constant(p, kNaN);
  out.theta = Eigen::VectorXd::Constant(p, kNaN);
  out.valid.assign(p, 0);

  const double lambda_inner = resolve_inner_lambda(opt, n, p);
  std::vector<int> design(m - 1);
  Eigen::VectorXd weights(m - 1);
  for (Eigen::Index i = 1; i < m; ++i) {
    int d = 0;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (j == i) continue;
      design[d] = static_cast<int>(j);
      weights[d] = j == 0 ? 0.0 : std::sqrt(std::max(Gw(j, j), 0.0));
      ++d;
    }
    const auto gl = detail::fit_lasso_gram(Gw, static_cast<int>(i), design, weights,
                                           lambda_inner);
    if (!gl.converged) {
      out.warnings.push_back("node-wise regression for covariate " + std::to_string(i) +
                             " failed; statistic excluded");
      continue;
    }
    // denominator sum_k h' Z_i X_i and scale sum_k h' Z_i^2 from the Gram
    double gi = Gw(i, i), quad = 0.0, cross = 0.0, num = c_res[i];
    for (int j = 0; j < d; ++j) {
      cross += gl.gamma[j] * Gw(design[j], i);
      num -= gl.gamma[j] * c_res[design[j]];
    }
    for (int j = 0; j < d; ++j) {
      if (gl.gamma[j] == 0.0) continue;
      for (int l = 0; l < d; ++l) {
        if (gl.gamma[l] == 0.0) continue;
        quad += gl.gamma[j] * gl.gamma[l] * Gw(design[j], design[l]);
      }
    }
    const double den = dn * (gi - cross);            // sum h' Z X_i
    const double zsq = dn * std::max(gi - 2.0 * cross + quad, 0.0); // sum h' Z^2
    if (std::abs(den) < 1e-8 * dn || zsq <= 0.0) {
      out.warnings.push_back("degenerate decorrelation score for covariate " +
                             std::to_string(i) + "; statistic excluded");
      continue;
    }
    const double beta_deb = fit.beta[i] + dn * num / den;
    out.W[i - 1] = beta_deb * den / std::sqrt(zsq);
    out.r_hat[i - 1] = beta_deb;
    out.sigma2[i - 1] = zsq / dn;
    out.theta[i - 1] = zsq / (den * den);
    out.valid[i - 1] = 1;
  }
  return out;
}

Eigen::VectorXd normal_transform(const TestStatisticSet& stats) {
  const Eigen::Index p = stats.W.size();
  Eigen::VectorXd N = Eigen::VectorXd::Constant(p, kNaN);
  for (Eigen::Index i = 0; i < p; ++i) {
    if (!stats.valid.empty() && !stats.valid[i]) continue;
    const double w = stats.W[i];
    if (!std::isfinite(w)) continue;
    if (stats.family == NullFamily::std_normal_folded) {
      N[i] = std::abs(w); // folded null cdf: the transform is exactly |W|
    } else {
      const double q = chi2_sf(w, stats.chi_df); // 1 - Psi(W), upper tail
      if (q <= 0.0) {
        N[i] = 40.0;
      } else if (q >= 1.0) {
        N[i] = 0.0;
      } else {
        N[i] = std::min(-norm_quantile(0.5 * q), 40.0);
      }
    }
  }
  return N;
}

TestingOutcome fdr_threshold(const Eigen::VectorXd& N, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw invalid_input("fdr_threshold: alpha must lie in (0,1)");
  TestingOutcome out;
  out.N = N;
  out.alpha = alpha;
  out.procedure = "alg1";

  std::vector<double> vals;
  for (Eigen::Index i = 0; i < N.size(); ++i)
    if (std::isfinite(N[i])) vals.push_back(N[i]);
  const double dp = static_cast<double>(vals.size());
  if (vals.empty()) {
    out.t_hat = 0.0;
    return out;
  }
  std::sort(vals.begin(), vals.end());

  const double fallback = std::sqrt(2.0 * std::log(dp));
  double cap = 2.0 * std::log(dp) - 2.0 * std::log(std::max(std::log(dp), 1e-10));
  cap = std::min(std::sqrt(std::max(cap, 0.0)), fallback);

  auto rejections_at = [&](double t) {
    return static_cast<double>(vals.end() -
                               std::lower_bound(vals.begin(), vals.end(), t));
  };
  auto criterion = [&](double t) {
    return 2.0 * dp * norm_sf(t) / std::max(rejections_at(t), 1.0);
  };

  double t_hat = fallback;
  bool found = false;
  if (criterion(0.0) <= alpha) {
    t_hat = 0.0;
    found = true;
  }
  if (!found) {
    for (double t : vals) {
      if (t > cap) break;
      if (criterion(t) <= alpha) {
        t_hat = t;
        found = true;
        break;
      }
    }
  }
  out.t_hat = t_hat;
  for (Eigen::Index i = 0; i < N.size(); ++i)
    if (std::isfinite(N[i]) && N[i] >= t_hat) out.rejected.push_back(static_cast<int>(i));
  out.fdp_estimate =
      2.0 * dp * norm_sf(t_hat) / std::max(static_cast<double>(out.rejected.size()), 1.0);
  return out;
}

double estimate_nonnull_proportion(const std::vector<double>& pvals, double delta) {
  if (pvals.empty())
    throw invalid_input("estimate_nonnull_proportion: empty p-value set");
  if (!(delta > 0.0 && delta < 0.5))
    throw invalid_input("estimate_nonnull_proportion: delta must lie in (0, 0.5)");
  double above = 0.0;
  for (double p : pvals)
    if (p > 0.5) above += 1.0;
  const double pi = 1.0 - above / (0.5 * static_cast<double>(pvals.size()));
  return std::clamp(pi, delta, 1.0 - delta);
}

namespace {

struct StepUpResult {
  std::vector<int> rejected; // positions into the compacted index list
  double p_threshold = 0.0;  // adjusted p-value at the step-up cut
  int k = 0;
};

StepUpResult weighted_step_up(const std::vector<double>& p_adj, double alpha) {
  const int m = static_cast<int>(p_adj.size());
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return p_adj[a] < p_adj[b]; });
  StepUpResult res;
  int k = 0;
  for (int j = 1; j <= m; ++j) {
    if (p_adj[order[j - 1]] <= static_cast<double>(j) * alpha / m) k = j;
  }
  res.k = k;
  if (k == 0) return res;
  res.p_threshold = p_adj[order[k - 1]];
  for (int i = 0; i < m; ++i)
    if (p_adj[i] <= res.p_threshold) res.rejected.push_back(i); // ties all rejected
  return res;
}

} // namespace

TestingOutcome gap_procedure(const Eigen::VectorXd& N,
                             const std::optional<Eigen::VectorXd>& S, double alpha,
                             const GapConfig& config) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw invalid_input("gap_procedure: alpha must lie in (0,1)");
  TestingOutcome out;
  out.N = N;
  out.alpha = alpha;
  out.procedure = "gap";

  std::vector<int> idx; // valid test positions
  for (Eigen::Index i = 0; i < N.size(); ++i) {
    if (!std::isfinite(N[i])) continue;
    if (S && !std::isfinite((*S)[i])) continue;
    idx.push_back(static_cast<int>(i));
  }
  const int m = static_cast<int>(idx.size());
  if (m == 0) {
    out.t_hat = 0.0;
    return out;
  }
  std::vector<double> pv(m), sv(m, 0.0);
  for (int j = 0; j < m; ++j) {
    pv[j] = 2.0 * norm_sf(N[idx[j]]);
    if (S) sv[j] = (*S)[idx[j]];
  }

  const bool have_s = S.has_value();
  if (!have_s)
    out.warnings.push_back("auxiliary statistics S absent; "
                           "falling back to the single-group step-up rule");

  // candidate split-point sets: empty (K=1) plus increasing (K-1)-subsets of
  // the S-quantile grid
  std::vector<double> grid;
  if (have_s) {
    std::vector<double> sorted = sv;
    std::sort(sorted.begin(), sorted.end());
    for (double q : config.split_quantiles) {
      const int pos = std::clamp(static_cast<int>(std::ceil(q * m)) - 1, 0, m - 1);
      grid.push_back(sorted[pos]);
    }
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  }
  std::vector<std::vector<double>> candidates;
  for (int K : config.K_candidates) {
    if (K == 1) {
      candidates.push_back({});
    } else if (K >= 2 && have_s) {
      // increasing (K-1)-combinations of the grid, in lexicographic order
      const int g = static_cast<int>(grid.size());
      const int choose = K - 1;
      if (choose > g) continue;
      std::vector<int> comb(choose);
      std::iota(comb.begin(), comb.end(), 0);
      while (true) {
        std::vector<double> splits;
        for (int c : comb) splits.push_back(grid[c]);
        candidates.push_back(splits);
        int pos = choose - 1;
        while (pos >= 0 && comb[pos] == g - choose + pos) --pos;
        if (pos < 0) break;
        ++comb[pos];
        for (int q = pos + 1; q < choose; ++q) comb[q] = comb[q - 1] + 1;
      }
    }
  }

  struct Best {
    int rejections = -1;
    std::vector<double> splits;
    StepUpResult step;
    GapGrouping info;
    std::vector<double> p_adj;
  } best;

  for (const auto& splits : candidates) {
    const int K = static_cast<int>(splits.size()) + 1;
    // assign groups: G_l = { lambda_{l-1} < S <= lambda_l }
    std::vector<int> group(m, 0);
    for (int j = 0; j < m; ++j) {
      int g = 0;
      while (g < K - 1 && sv[j] > splits[g]) ++g;
      group[j] = g;
    }
    std::vector<std::vector<double>> group_p(K);
    for (int j = 0; j < m; ++j) group_p[group[j]].push_back(pv[j]);
    bool ok = true;
    for (int g = 0; g < K; ++g)
      if (group_p[g].empty()) ok = false;
    if (!ok) continue;

    GapGrouping info;
    info.K = K;
    info.splits = splits;
    std::vector<double> ratio(K);
    double denom = 0.0;
    for (int g = 0; g < K; ++g) {
      const double pi = estimate_nonnull_proportion(group_p[g], config.delta);
      info.pi_hat.push_back(pi);
      info.sizes.push_back(static_cast<int>(group_p[g].size()));
      ratio[g] = pi / (1.0 - pi);
      denom += static_cast<double>(group_p[g].size()) * ratio[g];
    }
    std::vector<double> w(K);
    for (int g = 0; g < K; ++g) {
      w[g] = static_cast<double>(m) * ratio[g] / denom;
      info.weights.push_back(w[g]);
    }
    std::vector<double> p_adj(m);
    for (int j = 0; j < m; ++j) p_adj[j] = std::min(pv[j] / w[group[j]], 1.0);

    StepUpResult step = weighted_step_up(p_adj, alpha);
    const int rej = static_cast<int>(step.rejected.size());
    if (rej > best.rejections) { // strict: ties keep fewer groups/smaller splits
      best.rejections = rej;
      best.splits = splits;
      best.step = std::move(step);
      best.info = std::move(info);
      best.p_adj = std::move(p_adj);
    }
  }

  if (best.rejections < 0) { // no admissible grouping; unweighted single group
    best.step = weighted_step_up(pv, alpha);
    best.info.K = 1;
    best.info.sizes = {m};
    best.info.pi_hat = {estimate_nonnull_proportion(pv, config.delta)};
    best.info.weights = {1.0};
    best.rejections = static_cast<int>(best.step.rejected.size());
  }

  for (int j : best.step.rejected) out.rejected.push_back(idx[j]);
  std::sort(out.rejected.begin(), out.rejected.end());
  out.grouping = best.info;

  const double cap = std::sqrt(2.0 * std::log(static_cast<double>(m)));
  if (best.rejections > 0) {
    out.fdp_estimate = static_cast<double>(m) * best.step.p_threshold /
                       std::max(static_cast<double>(best.rejections), 1.0);
    const double half = 0.5 * std::min(best.step.p_threshold, 1.0);
    out.t_hat = half <= 0.0 ? cap : std::clamp(-norm_quantile(half), 0.0, cap);
  } else {
    out.fdp_estimate = 0.0;
    out.t_hat = cap;
  }
  return out;
}

} // namespace hdi
