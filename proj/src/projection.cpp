#include "hdi/projection.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace hdi {

namespace {

inline double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

// Dual coordinate-ascent state for the normalized program (unit loading).
// Stationarity ties the primal to the signed multipliers via
//   G u = -(1/2) * sum_i s_i a_i,
// where a_i is the constraint vector of pair i. For the infinity-norm rows
// a_i = G e_i and for the alignment row a = G xt, so u can be carried as a
// plain combination of e_i and xt; null(G) components are invisible to the
// objective, to every constraint, and to all downstream uses of u. Rows of X
// (the prediction bound) are brought in through g_k with G g_k = X_k', built
// from an eigendecomposition on demand.
class DualSolver {
public:
  DualSolver(const ProjectionProblem& pb, const Eigen::VectorXd& xt, double tau_t)
      : pb_(pb), G_(pb.gram), xt_(xt), tau_t_(tau_t), m_(pb.gram.rows()) {
    u_ = Eigen::VectorXd::Zero(m_);
    w_ = Eigen::VectorXd::Zero(m_);
    s1_ = Eigen::VectorXd::Zero(m_);
    gx_ = G_ * xt_;
    kappa2_ = xt_.dot(gx_);
    diag_ = G_.diagonal();
  }

  // Run coordinate ascent at the given lambda until the enabled constraints
  // are met within feas_tol and the duality gap is below gap_tol.
  // Returns true on success, false when the sweep budget runs out.
  bool run(double lambda, double gap_tol, int max_sweeps, int* sweeps_used) {
    // A zero Gram row makes the matching constraint independent of u.
    for (Eigen::Index i = 0; i < m_; ++i)
      if (diag_[i] <= 0.0 && std::abs(xt_[i]) > lambda + pb_.feas_tol) {
        *sweeps_used = 0;
        return false;
      }

    double dual_best = -std::numeric_limits<double>::infinity();
    int dual_drops = 0;
    int sweeps = 0;
    while (sweeps < max_sweeps) {
      ++sweeps;
      if (pb_.constraint2) update_align(lambda);
      for (Eigen::Index i = 0; i < m_; ++i) update_inf(i, lambda);
      for (std::size_t k = 0; k < rows_.size(); ++k) update_pred(k);

      if (sweeps % 256 == 0) refresh();

      const double primal = u_.dot(w_);
      if (primal > 1e14) break; // dual divergence: primal infeasible at this lambda

      const double dual = dual_value(lambda);
      if (dual < dual_best - 1e-7 * (1.0 + std::abs(dual_best))) {
        if (++dual_drops > 20) check_psd(); // ascent only fails on indefinite G
      } else {
        dual_best = std::max(dual_best, dual);
      }

      if (primal_violation(lambda) <= pb_.feas_tol && primal - dual <= gap_tol) {
        *sweeps_used = sweeps;
        return true;
      }
    }
    *sweeps_used = sweeps;
    return false;
  }

  // Largest violation of the constraints handled inside the sweeps (the
  // prediction bound is only enforced for activated rows; the caller screens
  // the remaining rows via x_violations()).
  double primal_violation(double lambda) const {
    double viol = (w_ - xt_).cwiseAbs().maxCoeff() - lambda;
    if (pb_.constraint2) viol = std::max(viol, std::abs(xt_.dot(w_) - 1.0) - lambda);
    for (std::size_t k = 0; k < rows_.size(); ++k)
      viol = std::max(viol, std::abs(va_[k]) - tau_t_);
    return viol;
  }

  // Rows of X whose bound is violated by the current iterate.
  std::vector<Eigen::Index> x_violations() const {
    std::vector<Eigen::Index> out;
    if (!pb_.X) return out;
    Eigen::VectorXd xu = (*pb_.X) * u_;
    for (Eigen::Index k = 0; k < xu.size(); ++k)
      if (std::abs(xu[k]) > tau_t_ + pb_.feas_tol) out.push_back(k);
    return out;
  }

  void activate_row(Eigen::Index k) {
    for (Eigen::Index seen : rows_)
      if (seen == k) return;
    check_psd();
    const Eigen::VectorXd a = pb_.X->row(k).transpose();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(m_);
    const auto& vals = eig_->eigenvalues();
    const auto& vecs = eig_->eigenvectors();
    const double cut = 1e-12 * std::max(vals.cwiseAbs().maxCoeff(), 1e-300);
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (vals[i] <= cut) continue;
      g.noalias() += (vecs.col(i).dot(a) / vals[i]) * vecs.col(i);
    }
    const double resid = (G_ * g - a).cwiseAbs().maxCoeff();
    if (resid > 1e-6 * std::max(1.0, a.cwiseAbs().maxCoeff()))
      throw solver_error("projection: prediction-bound row is outside the Gram range");
    rows_.push_back(k);
    g3_.push_back(g);
    qg3_.push_back(G_ * g);
    kappa3_.push_back(a.dot(g));
    s3_.push_back(0.0);
    va_.push_back(a.dot(u_));
  }

  const Eigen::VectorXd& u() const { return u_; }
  const Eigen::VectorXd& w() const { return w_; }
  std::size_t active_rows() const { return rows_.size(); }

  double dual_value(double lambda) const {
    double d = -u_.dot(w_) - s1_.dot(xt_) - lambda * s1_.cwiseAbs().sum();
    if (pb_.constraint2) d += -s2_ - lambda * std::abs(s2_);
    for (double s : s3_) d -= tau_t_ * std::abs(s);
    return d;
  }

private:
  void update_inf(Eigen::Index i, double lambda) {
    const double kappa = diag_[i];
    if (kappa <= 0.0) return;
    const double r = (w_[i] - xt_[i]) + 0.5 * s1_[i] * kappa;
    const double snew = 2.0 * soft_threshold(r, lambda) / kappa;
    const double delta = snew - s1_[i];
    if (delta == 0.0) return;
    s1_[i] = snew;
    u_[i] -= 0.5 * delta;
    w_.noalias() -= (0.5 * delta) * G_.col(i);
    bump_rows(i, delta);
  }

  void update_align(double lambda) {
    if (kappa2_ <= 0.0) return;
    const double r = (xt_.dot(w_) - 1.0) + 0.5 * s2_ * kappa2_;
    const double snew = 2.0 * soft_threshold(r, lambda) / kappa2_;
    const double delta = snew - s2_;
    if (delta == 0.0) return;
    s2_ = snew;
    u_.noalias() -= (0.5 * delta) * xt_;
    w_.noalias() -= (0.5 * delta) * gx_;
    for (std::size_t k = 0; k < rows_.size(); ++k)
      va_[k] -= 0.5 * delta * pb_.X->row(rows_[k]).dot(xt_);
  }

  void update_pred(std::size_t k) {
    const double kappa = kappa3_[k];
    if (kappa <= 0.0) return;
    const double r = va_[k] + 0.5 * s3_[k] * kappa;
    const double snew = 2.0 * soft_threshold(r, tau_t_) / kappa;
    const double delta = snew - s3_[k];
    if (delta == 0.0) return;
    s3_[k] = snew;
    u_.noalias() -= (0.5 * delta) * g3_[k];
    w_.noalias() -= (0.5 * delta) * qg3_[k];
    for (std::size_t l = 0; l < rows_.size(); ++l)
      va_[l] -= 0.5 * delta * pb_.X->row(rows_[l]).dot(g3_[k]);
  }

  void bump_rows(Eigen::Index coord, double delta) {
    for (std::size_t k = 0; k < rows_.size(); ++k)
      va_[k] -= 0.5 * delta * (*pb_.X)(rows_[k], coord);
  }

  void refresh() {
    w_.noalias() = G_ * u_;
    for (std::size_t k = 0; k < rows_.size(); ++k)
      va_[k] = pb_.X->row(rows_[k]).dot(u_);
  }

  void check_psd() {
    if (!eig_) {
      eig_.emplace(G_);
      if (eig_->info() != Eigen::Success)
        throw solver_error("projection: eigendecomposition of the Gram failed");
    }
    const double lmax = std::max(eig_->eigenvalues().maxCoeff(), 0.0);
    if (eig_->eigenvalues().minCoeff() < -1e-8 * std::max(1.0, lmax))
      throw invalid_input("projection: gram matrix is not positive semidefinite");
  }

  const ProjectionProblem& pb_;
  const Eigen::MatrixXd& G_;
  Eigen::VectorXd xt_;
  double tau_t_;
  Eigen::Index m_;

  Eigen::VectorXd u_, w_, s1_, gx_, diag_;
  double s2_ = 0.0, kappa2_ = 0.0;

  std::vector<Eigen::Index> rows_;   // activated prediction-bound rows
  std::vector<Eigen::VectorXd> g3_;  // G g = X_k'
  std::vector<Eigen::VectorXd> qg3_;
  std::vector<double> kappa3_, s3_, va_;

  std::optional<Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>> eig_;
};

void validate_problem(const ProjectionProblem& pb) {
  const Eigen::Index m = pb.gram.rows();
  if (pb.gram.cols() != m) throw invalid_input("projection: gram must be square");
  if (pb.loading.size() != m)
    throw invalid_input("projection: loading length does not match gram");
  if (pb.loading.cwiseAbs().maxCoeff() == 0.0)
    throw invalid_input("projection: loading must not be identically zero "
                        "(normalized constraints are undefined)");
  if (!(pb.lambda >= 0.0)) throw invalid_input("projection: lambda must be >= 0");
  const double scale = std::max(1.0, pb.gram.cwiseAbs().maxCoeff());
  if ((pb.gram - pb.gram.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw invalid_input("projection: gram must be symmetric");
  if (pb.gram.diagonal().minCoeff() < -1e-8 * scale)
    throw invalid_input("projection: gram matrix is not positive semidefinite");
  if (pb.tau) {
    if (!(*pb.tau > 0.0)) throw invalid_input("projection: tau must be positive");
    if (!pb.X) throw invalid_input("projection: tau requires the X matrix");
    if (pb.X->cols() != m) throw invalid_input("projection: X column count mismatch");
  }
}

} // namespace

ProjectionDirection solve_projection(const ProjectionProblem& pb) {
  validate_problem(pb);
  const Eigen::Index m = pb.gram.rows();
  const double norm_x = pb.loading.norm();
  const Eigen::VectorXd xt = pb.loading / norm_x;
  const double tau_t = pb.tau ? *pb.tau / norm_x : std::numeric_limits<double>::infinity();

  // Small problems get a full definiteness check upfront; larger ones rely on
  // the diagonal screen plus ascent monitoring inside the solver.
  if (m <= 64) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(pb.gram);
    const double lmax = std::max(es.eigenvalues().maxCoeff(), 0.0);
    if (es.eigenvalues().minCoeff() < -1e-8 * std::max(1.0, lmax))
      throw invalid_input("projection: gram matrix is not positive semidefinite");
  }

  const double qp_tol =
      pb.qp_tol >= 0.0 ? pb.qp_tol : 1e-7 * (1.0 + norm_x * norm_x);
  const double gap_tol = qp_tol / (norm_x * norm_x);

  DualSolver solver(pb, xt, tau_t);
  ProjectionDirection out;
  constexpr int kMaxEscalations = 10;
  for (int attempt = 0; attempt <= kMaxEscalations; ++attempt) {
    double lambda_eff;
    if (pb.lambda > 0.0)
      lambda_eff = pb.lambda * std::pow(1.25, attempt);
    else
      lambda_eff = attempt == 0 ? 0.0 : 1e-3 * std::pow(1.25, attempt - 1);

    bool ok = false;
    for (int round = 0; round < 40; ++round) {
      int sweeps = 0;
      ok = solver.run(lambda_eff, gap_tol, pb.max_sweeps, &sweeps);
      out.sweeps += sweeps;
      if (!ok) break;
      const auto violated = solver.x_violations();
      if (violated.empty()) break;
      for (Eigen::Index k : violated) solver.activate_row(k);
      ok = false;
    }
    if (ok) {
      out.escalations = attempt;
      out.lambda_effective = lambda_eff;
      out.u = norm_x * solver.u();
      out.objective = norm_x * norm_x * solver.u().dot(solver.w());
      out.slack_inf = (solver.w() - xt).cwiseAbs().maxCoeff();
      out.slack_align =
          pb.constraint2 ? std::abs(xt.dot(solver.w()) - 1.0)
                         : std::numeric_limits<double>::quiet_NaN();
      out.slack_linf_pred = pb.X ? ((*pb.X) * out.u).cwiseAbs().maxCoeff()
                                 : std::numeric_limits<double>::quiet_NaN();
      out.dual_gap = norm_x * norm_x *
                     (solver.u().dot(solver.w()) - solver.dual_value(lambda_eff));
      return out;
    }
  }
  throw solver_error("solve_projection: program infeasible after lambda escalation "
                     "(lambda = " + std::to_string(pb.lambda) + ", " +
                     std::to_string(kMaxEscalations) + " escalations tried)");
}

ProjectionDirection solve_projection_glm(const ProjectionProblem& pb) {
  if (!pb.tau || !pb.X)
    throw invalid_input("solve_projection_glm: tau and X are required");
  return solve_projection(pb);
}

} // namespace hdi
