#pragma once

#include <Eigen/Dense>
#include <optional>

#include "hdi/model_data.hpp"

namespace hdi {

/// Constrained quadratic program producing a debiasing direction:
///
///   minimize  u' G u
///   subject to  ||G u - x||_inf       <= ||x||_2 * lambda        (always)
///               |x' G u - ||x||_2^2|  <= ||x||_2^2 * lambda      (constraint2)
///               ||X u||_inf           <= tau                      (when tau set)
///
/// with G the (possibly weighted) sample Gram matrix and x the loading.
struct ProjectionProblem {
  Eigen::MatrixXd gram;
  Eigen::VectorXd loading;
  double lambda = 0.0;
  bool constraint2 = true;
  std::optional<double> tau;            // per-observation bound on |X u|
  std::optional<Eigen::MatrixXd> X;     // required when tau is set
  double qp_tol = -1.0;                 // duality-gap target; <0 -> 1e-7*(1+||x||^2)
  double feas_tol = 1e-7;               // allowed constraint violation
  int max_sweeps = 200000;              // dual coordinate-ascent sweeps per attempt
};

struct ProjectionDirection {
  Eigen::VectorXd u;
  double objective = 0.0;        // u' G u
  double slack_inf = 0.0;        // ||G u - x||_inf / ||x||_2
  double slack_align = 0.0;      // |x' G u - ||x||^2| / ||x||^2 (constraint2 only)
  double slack_linf_pred = 0.0;  // ||X u||_inf (tau only)
  double lambda_effective = 0.0; // tuning level at which feasibility was achieved
  double dual_gap = 0.0;
  int sweeps = 0;
  int escalations = 0;
};

/// Solve the program above. The dual is an l1-regularized concave quadratic in
/// one multiplier per constraint pair, maximized by cyclic coordinate ascent;
/// weak duality gives the reported gap certificate. If the program is
/// infeasible at the given lambda, lambda is escalated by 1.25 (at most 10
/// times, recorded in lambda_effective); failure after escalation throws.
ProjectionDirection solve_projection(const ProjectionProblem& problem);

/// GLM variant: identical program over the weighted Gram with the
/// per-observation bound required. Precondition: tau and X are set.
ProjectionDirection solve_projection_glm(const ProjectionProblem& problem);

} // namespace hdi
