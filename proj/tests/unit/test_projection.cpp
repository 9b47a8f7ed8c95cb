#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>

#include "hdi/penalized.hpp"
#include "hdi/projection.hpp"
#include "hdi/rng.hpp"
#include "oracles.hpp"

using namespace hdi;

TEST_SUITE("projection") {

TEST_CASE("identity gram with a unit loading has the closed-form solution") {
  const Eigen::Index m = 8, j = 3;
  ProjectionProblem pb;
  pb.gram = Eigen::MatrixXd::Identity(m, m);
  pb.loading = Eigen::VectorXd::Unit(m, j);
  pb.lambda = 0.2;
  pb.constraint2 = true;
  const ProjectionDirection dir = solve_projection(pb);
  CHECK(dir.u[j] == doctest::Approx(0.8).epsilon(1e-6));
  for (Eigen::Index i = 0; i < m; ++i)
    if (i != j) CHECK(std::abs(dir.u[i]) < 1e-8);
  CHECK(dir.objective == doctest::Approx(0.64).epsilon(1e-6));
  CHECK(dir.slack_inf <= pb.lambda + 1e-6);
  CHECK(dir.slack_align <= pb.lambda + 1e-6);
  CHECK(dir.lambda_effective == doctest::Approx(0.2));
  CHECK(dir.escalations == 0);
}

TEST_CASE("lambda 0 with an invertible gram returns gram^{-1} loading") {
  CounterRng rng(61, 0);
  const Eigen::Index n = 60, m = 6;
  Eigen::MatrixXd X = oracle::gaussian_matrix(rng, n, m);
  ProjectionProblem pb;
  pb.gram = X.transpose() * X / static_cast<double>(n);
  pb.loading = oracle::gaussian_vector(rng, m);
  pb.lambda = 0.0;
  const ProjectionDirection dir = solve_projection(pb);
  const Eigen::VectorXd expect = pb.gram.ldlt().solve(pb.loading);
  CHECK((dir.u - expect).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("direction is positively homogeneous in the loading") {
  CounterRng rng(62, 0);
  const Eigen::Index n = 50, m = 10;
  Eigen::MatrixXd X = oracle::gaussian_matrix(rng, n, m);
  ProjectionProblem pb;
  pb.gram = X.transpose() * X / static_cast<double>(n);
  pb.loading = Eigen::VectorXd::Unit(m, 2);
  pb.lambda = 0.3;
  const ProjectionDirection base = solve_projection(pb);
  for (double c : {3.0, 0.25}) {
    ProjectionProblem pc = pb;
    pc.loading = c * pb.loading;
    const ProjectionDirection scaled = solve_projection(pc);
    CHECK((scaled.u - c * base.u).cwiseAbs().maxCoeff() <
          1e-9 * std::max(1.0, c * base.u.cwiseAbs().maxCoeff()));
    CHECK(scaled.objective == doctest::Approx(c * c * base.objective).epsilon(1e-9));
  }
}

TEST_CASE("feasibility and duality gap hold on random singular grams") {
  for (std::uint64_t seed : {101ULL, 102ULL, 103ULL}) {
    CounterRng rng(seed, 0);
    const Eigen::Index n = 30, m = 60;
    Eigen::MatrixXd X = oracle::gaussian_matrix(rng, n, m);
    ProjectionProblem pb;
    pb.gram = X.transpose() * X / static_cast<double>(n); // rank <= 30
    pb.loading = Eigen::VectorXd::Unit(m, 5);
    pb.lambda = detail::default_rate(n, m - 1);
    const ProjectionDirection dir = solve_projection(pb);
    CHECK(dir.slack_inf <= dir.lambda_effective + 1e-6);
    CHECK(dir.slack_align <= dir.lambda_effective + 1e-6);
    CHECK(dir.dual_gap <= 1e-7 * (1.0 + pb.loading.squaredNorm()) + 1e-12);
    CHECK(dir.objective >= 0.0);
  }
}

TEST_CASE("matches a dense interior-point reference on small instances") {
  for (std::uint64_t seed : {71ULL, 72ULL, 73ULL, 74ULL}) {
    CounterRng rng(seed, 0);
    const Eigen::Index n = 40, m = 9;
    Eigen::MatrixXd X = oracle::gaussian_matrix(rng, n, m);
    ProjectionProblem pb;
    pb.gram = X.transpose() * X / static_cast<double>(n);
    Eigen::VectorXd loading = oracle::gaussian_vector(rng, m);
    pb.loading = loading;
    pb.lambda = 0.25;
    pb.constraint2 = true;
    const ProjectionDirection dir = solve_projection(pb);
    REQUIRE(dir.escalations == 0);

    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    oracle::projection_constraints(pb.gram, pb.loading, pb.lambda, true, nullptr, 0.0,
                                   &A, &b);
    // gram^{-1} x is strictly feasible here (all slacks equal the bound)
    const Eigen::VectorXd u0 = pb.gram.ldlt().solve(pb.loading);
    REQUIRE(((A * u0 - b).array() < 0.0).all());
    const Eigen::VectorXd u_ref = oracle::barrier_qp(pb.gram, A, b, u0);
    const double obj_ref = u_ref.dot(pb.gram * u_ref);
    CHECK(dir.objective <= obj_ref + 1e-5);
  }
}

TEST_CASE("glm variant with unit weights and slack tau matches the linear program") {
  CounterRng rng(81, 0);
  const Eigen::Index n = 50, m = 12;
  Eigen::MatrixXd X = oracle::gaussian_matrix(rng, n, m);
  ProjectionProblem lin;
  lin.gram = X.transpose() * X / static_cast<double>(n);
  lin.loading = Eigen::VectorXd::Unit(m, 4);
  lin.lambda = 0.3;
  const ProjectionDirection a = solve_projection(lin);

  ProjectionProblem glm = lin;
  glm.tau = 1e6; // inactive bound
  glm.X = X;
  const ProjectionDirection b = solve_projection_glm(glm);
  CHECK((a.u - b.u).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(b.slack_linf_pred == doctest::Approx((X * b.u).cwiseAbs().maxCoeff()));
}

TEST_CASE("single-observation program matches a grid search and analytics") {
  // one row (1, 0.5): the program minimizes (u1 + 0.5 u2)^2 over an interval
  Eigen::MatrixXd X(1, 2);
  X << 1.0, 0.5;
  ProjectionProblem pb;
  pb.gram = X.transpose() * X;
  pb.loading = Eigen::VectorXd::Unit(2, 1);
  pb.lambda = 0.9;
  pb.tau = 0.6;
  pb.X = X;
  const ProjectionDirection dir = solve_projection_glm(pb);
  CHECK(dir.objective == doctest::Approx(0.04).epsilon(1e-4));
  CHECK(dir.slack_inf <= 0.9 + 1e-6);
  CHECK(dir.slack_linf_pred <= 0.6 + 1e-6);

  double grid_best = 1e300;
  for (double u1 = -3.0; u1 <= 3.0; u1 += 2e-3) {
    for (double u2 = -3.0; u2 <= 3.0; u2 += 2e-3) {
      const double w1 = u1 + 0.5 * u2;
      const double w2 = 0.5 * w1;
      if (std::abs(w1 - 0.0) > 0.9 || std::abs(w2 - 1.0) > 0.9) continue;
      if (std::abs(w2 - 1.0) > 0.9) continue;
      if (std::abs(w1) > 0.6) continue;
      grid_best = std::min(grid_best, w1 * w1);
    }
  }
  CHECK(dir.objective <= grid_best + 1e-4);
}

TEST_CASE("unreachable tau stays infeasible through escalation and throws") {
  Eigen::MatrixXd X(1, 2);
  X << 1.0, 0.5;
  ProjectionProblem pb;
  pb.gram = X.transpose() * X;
  pb.loading = Eigen::VectorXd::Unit(2, 1);
  pb.lambda = 0.05; // even after ten escalations lambda stays below 1
  pb.tau = 0.1;
  pb.X = X;
  pb.max_sweeps = 20000;
  CHECK_THROWS_AS(solve_projection_glm(pb), solver_error);
}

TEST_CASE("loading outside the gram range escalates until u = 0 is feasible") {
  ProjectionProblem pb;
  pb.gram = Eigen::MatrixXd::Zero(2, 2);
  pb.gram(0, 0) = 1.0;
  pb.loading = Eigen::VectorXd::Unit(2, 1); // not in range
  pb.lambda = 0.2;
  pb.max_sweeps = 20000;
  const ProjectionDirection dir = solve_projection(pb);
  CHECK(dir.escalations > 0);
  CHECK(dir.lambda_effective >= 1.0);
  CHECK(dir.objective == doctest::Approx(0.0));
}

TEST_CASE("input validation") {
  ProjectionProblem pb;
  pb.gram = Eigen::MatrixXd::Identity(3, 3);
  pb.loading = Eigen::VectorXd::Zero(3);
  pb.lambda = 0.2;
  CHECK_THROWS_AS(solve_projection(pb), invalid_input); // zero loading

  pb.loading = Eigen::VectorXd::Unit(3, 0);
  pb.gram(0, 0) = -1.0; // indefinite
  CHECK_THROWS_AS(solve_projection(pb), invalid_input);

  pb.gram = Eigen::MatrixXd::Identity(3, 3);
  pb.gram(0, 1) = 2.0;
  pb.gram(1, 0) = 2.0; // symmetric but indefinite (eigenvalue -1)
  CHECK_THROWS_AS(solve_projection(pb), invalid_input);

  ProjectionProblem glm;
  glm.gram = Eigen::MatrixXd::Identity(2, 2);
  glm.loading = Eigen::VectorXd::Unit(2, 0);
  glm.lambda = 0.2;
  CHECK_THROWS_AS(solve_projection_glm(glm), invalid_input); // tau missing
}

} // TEST_SUITE
