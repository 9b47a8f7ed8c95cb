#include "hdi/inference.hpp"

#include <algorithm>
#include <cmath>

#include "hdi/stats.hpp"

namespace hdi {

Weighting weighting_from_string(const std::string& name) {
  if (name == "linearization") return Weighting::linearization;
  if (name == "link-specific" || name == "link_specific") return Weighting::link_specific;
  throw invalid_input("unknown weighting '" + name +
                      "' (expected linearization|link-specific)");
}

nlohmann::json result_to_json(const InferenceResult& r) {
  nlohmann::json j;
  j["estimate"] = r.estimate;
  j["variance"] = r.variance;
  j["ci"] = {r.ci_lower, r.ci_upper};
  j["alpha"] = r.alpha;
  j["z_stat"] = r.z_stat;
  if (r.test)
    j["test"] = {{"statistic", r.test->statistic}, {"reject", r.test->reject}};
  else
    j["test"] = nullptr;
  if (r.transformed_ci)
    j["transformed_ci"] = {r.transformed_ci->first, r.transformed_ci->second};
  if (r.transformed_estimate) j["transformed_estimate"] = *r.transformed_estimate;
  if (!r.flags.empty()) j["flags"] = r.flags;
  for (const auto& [k, v] : r.extras) j[k] = v;
  return j;
}

namespace {

void finish_interval(InferenceResult& r) {
  const double z = norm_quantile(1.0 - r.alpha / 2.0);
  const double se = std::sqrt(std::max(r.variance, 0.0));
  r.ci_lower = r.estimate - z * se;
  r.ci_upper = r.estimate + z * se;
  if (se > 0.0) {
    r.z_stat = r.estimate / se;
  } else {
    r.z_stat = 0.0;
    r.degenerate = true;
    r.flags.push_back("zero_variance");
  }
}

PenalizedFit obtain_fit(const Dataset& data, const InferenceOptions& opt,
                        const PenalizedFit* provided) {
  if (provided) return *provided;
  return data.link() == Link::identity ? fit_lasso(data, opt.fit)
                                       : fit_logistic_lasso(data, opt.fit);
}

double proj_lambda_default(const InferenceOptions& opt, Eigen::Index n, Eigen::Index p) {
  return opt.proj_lambda ? *opt.proj_lambda : detail::default_rate(n, p);
}

} // namespace

InferenceResult lf_linear(const Dataset& data, const Eigen::VectorXd& x_new,
                          const InferenceOptions& opt) {
  if (data.link() != Link::identity)
    throw invalid_input("lf_linear requires the identity link");
  if (x_new.size() != data.X().cols())
    throw invalid_input("lf_linear: x_new must have length p+1");
  if (x_new.cwiseAbs().maxCoeff() == 0.0)
    throw invalid_input("lf_linear: x_new must not be zero");

  const PenalizedFit fit = obtain_fit(data, opt, opt.precomputed_fit);
  const Eigen::Index n = data.n();
  const double dn = static_cast<double>(n);

  const Eigen::MatrixXd gram =
      (data.X().transpose() * data.X()) / dn;
  ProjectionProblem pb;
  pb.gram = gram;
  pb.loading = x_new;
  pb.lambda = proj_lambda_default(opt, n, data.p());
  pb.constraint2 = true;
  const ProjectionDirection dir = solve_projection(pb);

  const Eigen::VectorXd score = data.X().transpose() * (data.y() - data.X() * fit.beta) / dn;

  InferenceResult r;
  r.alpha = opt.alpha;
  r.estimate = x_new.dot(fit.beta) + dir.u.dot(score);
  r.variance = fit.sigma_eps * fit.sigma_eps / dn * dir.objective;
  finish_interval(r);
  r.extras["proj_lambda_effective"] = dir.lambda_effective;
  return r;
}

InferenceResult lf_logistic(const Dataset& data, const Eigen::VectorXd& x_new,
                            const InferenceOptions& opt) {
  if (data.link() != Link::logistic)
    throw invalid_input("lf_logistic requires the logistic link");
  if (x_new.size() != data.X().cols())
    throw invalid_input("lf_logistic: x_new must have length p+1");
  if (x_new.cwiseAbs().maxCoeff() == 0.0)
    throw invalid_input("lf_logistic: x_new must not be zero");

  const PenalizedFit fit = obtain_fit(data, opt, opt.precomputed_fit);
  const Eigen::Index n = data.n();
  const double dn = static_cast<double>(n);
  const Eigen::MatrixXd& X = data.X();

  Eigen::VectorXd eta = X * fit.beta;
  Eigen::VectorXd h(n), hp(n), W(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const LinkValues lv = link_eval(Link::logistic, eta[k]);
    h[k] = lv.value;
    hp[k] = std::max(lv.d1, 1e-300);
    W[k] = opt.weighting == Weighting::linearization ? 1.0 / hp[k] : 1.0;
  }

  ProjectionProblem pb;
  if (opt.weighting == Weighting::linearization) {
    // W_k h'(eta_k) = 1, so the weighted Gram is the plain one
    pb.gram = (X.transpose() * X) / dn;
  } else {
    Eigen::VectorXd wk = W.cwiseProduct(hp);
    pb.gram = (X.transpose() * wk.asDiagonal() * X) / dn;
  }
  pb.loading = x_new;
  pb.lambda = proj_lambda_default(opt, n, data.p());
  pb.constraint2 = true;
  pb.tau = opt.tau ? *opt.tau : 2.0 * std::sqrt(std::log(dn));
  pb.X = X;
  const ProjectionDirection dir = solve_projection_glm(pb);

  Eigen::VectorXd weighted_resid = W.cwiseProduct(data.y() - h);
  const Eigen::VectorXd score = X.transpose() * weighted_resid / dn;

  // variance Gram: (1/n) sum W^2 h(1-h) x x'
  Eigen::VectorXd xu = X * dir.u;
  double quad = 0.0;
  for (Eigen::Index k = 0; k < n; ++k)
    quad += W[k] * W[k] * h[k] * (1.0 - h[k]) * xu[k] * xu[k];
  quad /= dn;

  InferenceResult r;
  r.alpha = opt.alpha;
  r.estimate = x_new.dot(fit.beta) + dir.u.dot(score);
  r.variance = quad / dn;
  finish_interval(r);
  r.transformed_ci = {link_eval(Link::logistic, r.ci_lower).value,
                      link_eval(Link::logistic, r.ci_upper).value};
  r.transformed_estimate = link_eval(Link::logistic, r.estimate).value;
  r.extras["proj_lambda_effective"] = dir.lambda_effective;
  return r;
}

InferenceResult cate(const Dataset& data1, const Dataset& data2,
                     const Eigen::VectorXd& x_new, const InferenceOptions& opt) {
  if (data1.link() != data2.link())
    throw invalid_input("cate: the two samples must share the link");
  if (data1.p() != data2.p())
    throw invalid_input("cate: the two samples must have the same p");

  InferenceOptions o1 = opt;
  o1.precomputed_fit = opt.precomputed_fit;
  o1.precomputed_fit2 = nullptr;
  InferenceOptions o2 = opt;
  o2.precomputed_fit = opt.precomputed_fit2;
  o2.precomputed_fit2 = nullptr;

  const bool logistic = data1.link() == Link::logistic;
  const InferenceResult r1 =
      logistic ? lf_logistic(data1, x_new, o1) : lf_linear(data1, x_new, o1);
  const InferenceResult r2 =
      logistic ? lf_logistic(data2, x_new, o2) : lf_linear(data2, x_new, o2);

  InferenceResult r;
  r.alpha = opt.alpha;
  r.estimate = r2.estimate - r1.estimate;
  r.variance = r1.variance + r2.variance;
  finish_interval(r);
  if (logistic)
    r.transformed_estimate = *r2.transformed_estimate - *r1.transformed_estimate;

  // one-sided test of H0: contrast <= 0
  const double z_a = norm_quantile(1.0 - opt.alpha);
  const double se = std::sqrt(std::max(r.variance, 0.0));
  TestDecision t;
  t.statistic = se > 0.0 ? r.estimate / se : 0.0;
  t.reject = r.estimate - z_a * se >= 0.0 && (se > 0.0 || r.estimate > 0.0);
  r.test = t;
  return r;
}

InferenceResult qf(const Dataset& data, const QuadTarget& target,
                   const InferenceOptions& opt) {
  if (data.link() != Link::identity)
    throw invalid_input("qf requires the identity link");
  if (target.G.empty()) throw invalid_input("qf: G must be nonempty");
  const Eigen::Index m = data.X().cols();
  for (int g : target.G)
    if (g < 1 || g >= m)
      throw invalid_input("qf: G indices must name covariate columns (1..p)");
  const Eigen::Index gs = static_cast<Eigen::Index>(target.G.size());
  if (target.mode == QuadTarget::Mode::matrix_A) {
    if (target.A.rows() != gs || target.A.cols() != gs)
      throw invalid_input("qf: A must be |G| x |G|");
    if ((target.A - target.A.transpose()).cwiseAbs().maxCoeff() >
        1e-10 * std::max(1.0, target.A.cwiseAbs().maxCoeff()))
      throw invalid_input("qf: A must be symmetric");
  }
  if (!(target.tau_var > 0.0)) throw invalid_input("qf: tau_var must be positive");

  const PenalizedFit fit = obtain_fit(data, opt, opt.precomputed_fit);

  // correction sample: full data, or the second half under sample splitting
  Eigen::MatrixXd Xc;
  Eigen::VectorXd yc;
  if (opt.sample_splitting) {
    const Eigen::Index half = data.n() / 2;
    // refit on the first half, correct on the second
    Dataset front = validate_dataset(
        data.X().topRows(half).rightCols(m - 1), data.y().head(half), Link::identity);
    InferenceOptions ofit = opt;
    ofit.precomputed_fit = nullptr;
    const PenalizedFit split_fit = obtain_fit(front, ofit, nullptr);
    Xc = data.X().bottomRows(data.n() - half);
    yc = data.y().tail(data.n() - half);
    return [&] {
      // re-enter with the split fit and no splitting on the correction half
      Dataset back = validate_dataset(Xc.rightCols(m - 1), yc, Link::identity);
      InferenceOptions o2 = opt;
      o2.sample_splitting = false;
      o2.precomputed_fit = &split_fit;
      InferenceResult r = qf(back, target, o2);
      r.flags.push_back("sample_splitting");
      return r;
    }();
  }
  Xc = data.X();
  yc = data.y();
  const Eigen::Index nc = Xc.rows();
  const double dn = static_cast<double>(nc);
  const double sigma = (yc - Xc * fit.beta).norm() / std::sqrt(dn);

  Eigen::VectorXd beta_G(gs);
  for (Eigen::Index i = 0; i < gs; ++i) beta_G[i] = fit.beta[target.G[i]];

  const Eigen::MatrixXd gram = (Xc.transpose() * Xc) / dn;
  Eigen::MatrixXd sigma_GG(gs, gs);
  for (Eigen::Index i = 0; i < gs; ++i)
    for (Eigen::Index j = 0; j < gs; ++j) sigma_GG(i, j) = gram(target.G[i], target.G[j]);

  Eigen::VectorXd loading_G =
      target.mode == QuadTarget::Mode::matrix_A ? (target.A * beta_G).eval()
                                                : (sigma_GG * beta_G).eval();
  const double plugin = beta_G.dot(loading_G);

  InferenceResult r;
  r.alpha = opt.alpha;
  const double tau_v = target.tau_var;

  double fourth = 0.0;
  if (target.mode == QuadTarget::Mode::covariance_Sigma) {
    Eigen::MatrixXd XG(nc, gs);
    for (Eigen::Index i = 0; i < gs; ++i) XG.col(i) = Xc.col(target.G[i]);
    const Eigen::VectorXd tg = XG * beta_G;
    fourth = (tg.array().square() - plugin).square().sum() / (dn * dn);
  }

  if (loading_G.cwiseAbs().maxCoeff() == 0.0) {
    r.estimate = plugin; // zero; the correction vanishes on this path
    r.variance = tau_v / dn;
    r.flags.push_back("null_loading");
    finish_interval(r);
  } else {
    Eigen::VectorXd loading = Eigen::VectorXd::Zero(m);
    for (Eigen::Index i = 0; i < gs; ++i) loading[target.G[i]] = loading_G[i];
    ProjectionProblem pb;
    pb.gram = gram;
    pb.loading = loading;
    pb.lambda = proj_lambda_default(opt, nc, m - 1);
    pb.constraint2 = true;
    const ProjectionDirection dir = solve_projection(pb);
    const Eigen::VectorXd score = Xc.transpose() * (yc - Xc * fit.beta) / dn;
    r.estimate = plugin + 2.0 * dir.u.dot(score);
    r.variance = 4.0 * sigma * sigma * dir.objective / dn + fourth + tau_v / dn;
    finish_interval(r);
    r.extras["proj_lambda_effective"] = dir.lambda_effective;
  }

  const double z_a = norm_quantile(1.0 - opt.alpha);
  TestDecision t;
  const double se = std::sqrt(std::max(r.variance, 0.0));
  t.statistic = se > 0.0 ? r.estimate / se : 0.0;
  t.reject = r.estimate >= z_a * se;
  r.test = t;
  return r;
}

InferenceResult qf_semisupervised(const Dataset& labeled,
                                  const Eigen::MatrixXd& unlabeled_X,
                                  const InferenceOptions& opt) {
  if (labeled.link() != Link::identity)
    throw invalid_input("qf_semisupervised requires the identity link");
  const Eigen::Index n = labeled.n();
  const Eigen::Index p = labeled.p();
  const Eigen::Index N = unlabeled_X.rows();
  if (N > 0 && unlabeled_X.cols() != p)
    throw invalid_input("qf_semisupervised: unlabeled covariates must have p columns");

  const PenalizedFit fit = obtain_fit(labeled, opt, opt.precomputed_fit);
  const double dn = static_cast<double>(n);
  const double dnN = static_cast<double>(n + N);

  // pooled quadratic form beta' Sigma^S beta without materializing Sigma^S
  const Eigen::VectorXd t_lab = labeled.X() * fit.beta;
  Eigen::VectorXd t_unl;
  if (N > 0)
    t_unl = Eigen::VectorXd::Ones(N) * fit.beta[0] +
            unlabeled_X * fit.beta.tail(p);
  const double qs =
      (t_lab.squaredNorm() + (N > 0 ? t_unl.squaredNorm() : 0.0)) / dnN;

  const Eigen::VectorXd resid = labeled.y() - t_lab;
  const double correction = 2.0 * t_lab.dot(resid) / dn; // = 2 beta' X'(y-Xb)/n
  const double sigma = resid.norm() / std::sqrt(dn);
  const double rho = dn / dnN;

  double fourth = (t_lab.array().square() - qs).square().sum();
  if (N > 0) fourth += (t_unl.array().square() - qs).square().sum();
  fourth /= dnN;

  InferenceResult r;
  r.alpha = opt.alpha;
  r.estimate = qs + correction;
  r.variance = (4.0 * sigma * sigma * qs + rho * fourth + opt.tau_var) / dn;
  finish_interval(r);
  if (r.ci_lower < 0.0) {
    r.ci_lower = 0.0; // the target is a nonnegative quadratic form
    r.flags.push_back("lower_clipped");
  }
  r.extras["rho"] = rho;
  return r;
}

InferenceResult inner_product(const Dataset& data1, const Dataset& data2,
                              const InferenceOptions& opt) {
  if (data1.link() != Link::identity || data2.link() != Link::identity)
    throw invalid_input("inner_product requires the identity link on both samples");
  if (data1.p() != data2.p())
    throw invalid_input("inner_product: the two samples must have the same p");

  const PenalizedFit fit1 = obtain_fit(data1, opt, opt.precomputed_fit);
  const PenalizedFit fit2 = obtain_fit(data2, opt, opt.precomputed_fit2);
  const double n1 = static_cast<double>(data1.n());
  const double n2 = static_cast<double>(data2.n());

  const Eigen::MatrixXd gram1 = (data1.X().transpose() * data1.X()) / n1;
  const Eigen::MatrixXd gram2 = (data2.X().transpose() * data2.X()) / n2;
  const Eigen::VectorXd score1 =
      data1.X().transpose() * (data1.y() - data1.X() * fit1.beta) / n1;
  const Eigen::VectorXd score2 =
      data2.X().transpose() * (data2.y() - data2.X() * fit2.beta) / n2;

  InferenceResult r;
  r.alpha = opt.alpha;

  double corr1 = 0.0, var1 = 0.0; // direction u1: gram2, loading beta1
  if (fit1.beta.cwiseAbs().maxCoeff() > 0.0) {
    ProjectionProblem pb;
    pb.gram = gram2;
    pb.loading = fit1.beta;
    pb.lambda = opt.proj_lambda ? *opt.proj_lambda
                                : detail::default_rate(data2.n(), data2.p());
    pb.constraint2 = false; // sparse loadings; alignment constraint not needed
    const ProjectionDirection d1 = solve_projection(pb);
    corr1 = d1.u.dot(score2);
    var1 = fit2.sigma_eps * fit2.sigma_eps * d1.objective / n2;
  } else {
    r.flags.push_back("null_loading_sample1");
  }

  double corr2 = 0.0, var2 = 0.0; // direction u2: gram1, loading beta2
  if (fit2.beta.cwiseAbs().maxCoeff() > 0.0) {
    ProjectionProblem pb;
    pb.gram = gram1;
    pb.loading = fit2.beta;
    pb.lambda = opt.proj_lambda ? *opt.proj_lambda
                                : detail::default_rate(data1.n(), data1.p());
    pb.constraint2 = false;
    const ProjectionDirection d2 = solve_projection(pb);
    corr2 = d2.u.dot(score1);
    var2 = fit1.sigma_eps * fit1.sigma_eps * d2.objective / n1;
  } else {
    r.flags.push_back("null_loading_sample2");
  }

  r.estimate = fit1.beta.dot(fit2.beta) + (corr1 + corr2);
  r.variance = var1 + var2;
  finish_interval(r);
  return r;
}

} // namespace hdi
