#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hdi/csv.hpp"
#include "hdi/inference.hpp"
#include "hdi/model_data.hpp"
#include "hdi/multiple_testing.hpp"
#include "hdi/penalized.hpp"
#include "hdi/projection.hpp"
#include "hdi/simulate.hpp"
#include "hdi/stats.hpp"

namespace py = pybind11;
using namespace hdi;

namespace {

PenaltyConfig make_penalty_config(std::optional<double> lambda0, int cv_folds,
                                  std::uint64_t cv_seed) {
  PenaltyConfig cfg;
  cfg.lambda0 = lambda0;
  cfg.cv_folds = cv_folds;
  cfg.cv_seed = cv_seed;
  return cfg;
}

InferenceOptions make_inference_options(double alpha, std::optional<double> lambda0,
                                        int cv_folds, std::optional<double> proj_lambda,
                                        std::optional<double> tau,
                                        const std::string& weighting,
                                        bool sample_splitting, double tau_var) {
  InferenceOptions opt;
  opt.alpha = alpha;
  opt.fit.lambda0 = lambda0;
  opt.fit.cv_folds = cv_folds;
  opt.proj_lambda = proj_lambda;
  opt.tau = tau;
  opt.weighting = weighting_from_string(weighting);
  opt.sample_splitting = sample_splitting;
  opt.tau_var = tau_var;
  return opt;
}

py::object json_to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "debiased inference for high-dimensional linear and logistic regression";

  py::register_exception<invalid_input>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<solver_error>(m, "SolverError", PyExc_RuntimeError);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init([](const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const std::string& link, bool prepend_intercept) {
             return validate_dataset(X, y, link_from_string(link), prepend_intercept);
           }),
           py::arg("X"), py::arg("y"), py::arg("link") = "linear",
           py::arg("prepend_intercept") = true,
           "Validated regression sample; covariates gain a leading intercept column.")
      .def_property_readonly("X", &Dataset::X)
      .def_property_readonly("y", &Dataset::y)
      .def_property_readonly("n", &Dataset::n)
      .def_property_readonly("p", &Dataset::p)
      .def_property_readonly("column_scales", &Dataset::column_scales)
      .def_property_readonly("link",
                             [](const Dataset& d) { return link_name(d.link()); });

  py::class_<PenalizedFit>(m, "PenalizedFit")
      .def_readonly("beta", &PenalizedFit::beta)
      .def_readonly("sigma_eps", &PenalizedFit::sigma_eps)
      .def_readonly("lambda_", &PenalizedFit::lambda)
      .def_readonly("active_set", &PenalizedFit::active_set)
      .def_readonly("converged", &PenalizedFit::converged)
      .def_readonly("kkt_residual", &PenalizedFit::kkt_residual)
      .def("to_json", [](const PenalizedFit& f) {
        return json_to_py(fit_to_json(f, Link::identity));
      });

  py::class_<GroupFit>(m, "GroupFit")
      .def_readonly("B", &GroupFit::B)
      .def_readonly("sigma_eps", &GroupFit::sigma_eps)
      .def_readonly("lambda_", &GroupFit::lambda)
      .def_readonly("active_rows", &GroupFit::active_rows)
      .def_readonly("kkt_residual", &GroupFit::kkt_residual);

  m.def("fit_lasso",
        [](const Dataset& d, std::optional<double> lambda0, int cv_folds,
           std::uint64_t cv_seed) {
          return fit_lasso(d, make_penalty_config(lambda0, cv_folds, cv_seed));
        },
        py::arg("data"), py::arg("lambda0") = py::none(), py::arg("cv_folds") = 0,
        py::arg("cv_seed") = 1);
  m.def("fit_scaled_lasso",
        [](const Dataset& d, std::optional<double> lambda0) {
          return fit_scaled_lasso(d, make_penalty_config(lambda0, 0, 1));
        },
        py::arg("data"), py::arg("lambda0") = py::none());
  m.def("fit_logistic_lasso",
        [](const Dataset& d, std::optional<double> lambda0, int cv_folds,
           std::uint64_t cv_seed) {
          return fit_logistic_lasso(d, make_penalty_config(lambda0, cv_folds, cv_seed));
        },
        py::arg("data"), py::arg("lambda0") = py::none(), py::arg("cv_folds") = 0,
        py::arg("cv_seed") = 1);
  m.def("fit_group_lasso",
        [](const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
           std::optional<double> lambda0) {
          return fit_group_lasso(X, Y, make_penalty_config(lambda0, 0, 1));
        },
        py::arg("X"), py::arg("Y"), py::arg("lambda0") = py::none());

  py::class_<ProjectionDirection>(m, "ProjectionDirection")
      .def_readonly("u", &ProjectionDirection::u)
      .def_readonly("objective", &ProjectionDirection::objective)
      .def_readonly("slack_inf", &ProjectionDirection::slack_inf)
      .def_readonly("slack_align", &ProjectionDirection::slack_align)
      .def_readonly("slack_linf_pred", &ProjectionDirection::slack_linf_pred)
      .def_readonly("lambda_effective", &ProjectionDirection::lambda_effective)
      .def_readonly("dual_gap", &ProjectionDirection::dual_gap)
      .def_readonly("escalations", &ProjectionDirection::escalations);

  m.def("solve_projection",
        [](const Eigen::MatrixXd& gram, const Eigen::VectorXd& loading, double lam,
           bool constraint2, std::optional<double> tau,
           std::optional<Eigen::MatrixXd> X) {
          ProjectionProblem pb;
          pb.gram = gram;
          pb.loading = loading;
          pb.lambda = lam;
          pb.constraint2 = constraint2;
          pb.tau = tau;
          pb.X = std::move(X);
          return solve_projection(pb);
        },
        py::arg("gram"), py::arg("loading"), py::arg("lambda_"),
        py::arg("constraint2") = true, py::arg("tau") = py::none(),
        py::arg("X") = py::none());

  py::class_<TestDecision>(m, "TestDecision")
      .def_readonly("statistic", &TestDecision::statistic)
      .def_readonly("reject", &TestDecision::reject);

  py::class_<InferenceResult>(m, "InferenceResult")
      .def_readonly("estimate", &InferenceResult::estimate)
      .def_readonly("variance", &InferenceResult::variance)
      .def_readonly("ci_lower", &InferenceResult::ci_lower)
      .def_readonly("ci_upper", &InferenceResult::ci_upper)
      .def_readonly("alpha", &InferenceResult::alpha)
      .def_readonly("z_stat", &InferenceResult::z_stat)
      .def_readonly("transformed_ci", &InferenceResult::transformed_ci)
      .def_readonly("transformed_estimate", &InferenceResult::transformed_estimate)
      .def_readonly("test", &InferenceResult::test)
      .def_readonly("degenerate", &InferenceResult::degenerate)
      .def_readonly("flags", &InferenceResult::flags)
      .def_readonly("extras", &InferenceResult::extras)
      .def("to_json", [](const InferenceResult& r) { return json_to_py(result_to_json(r)); });

#define HDI_INFER_ARGS                                                                  \
  py::arg("alpha") = 0.05, py::arg("lambda0") = py::none(), py::arg("cv_folds") = 0,    \
  py::arg("proj_lambda") = py::none(), py::arg("tau") = py::none(),                     \
  py::arg("weighting") = "linearization", py::arg("sample_splitting") = false,          \
  py::arg("tau_var") = 1.0

  m.def("lf",
        [](const Dataset& d, const Eigen::VectorXd& x_new, double alpha,
           std::optional<double> lambda0, int cv_folds, std::optional<double> proj_lambda,
           std::optional<double> tau, const std::string& weighting, bool split,
           double tau_var) {
          const auto opt = make_inference_options(alpha, lambda0, cv_folds, proj_lambda,
                                                  tau, weighting, split, tau_var);
          return d.link() == Link::identity ? lf_linear(d, x_new, opt)
                                            : lf_logistic(d, x_new, opt);
        },
        py::arg("data"), py::arg("x_new"), HDI_INFER_ARGS,
        "Debiased estimate and CI for x_new' beta (x_new has length p+1).");

  m.def("cate",
        [](const Dataset& d1, const Dataset& d2, const Eigen::VectorXd& x_new,
           double alpha, std::optional<double> lambda0, int cv_folds,
           std::optional<double> proj_lambda, std::optional<double> tau,
           const std::string& weighting, bool split, double tau_var) {
          const auto opt = make_inference_options(alpha, lambda0, cv_folds, proj_lambda,
                                                  tau, weighting, split, tau_var);
          return cate(d1, d2, x_new, opt);
        },
        py::arg("data1"), py::arg("data2"), py::arg("x_new"), HDI_INFER_ARGS);

  m.def("qf",
        [](const Dataset& d, const std::vector<int>& G,
           std::optional<Eigen::MatrixXd> A, double alpha, std::optional<double> lambda0,
           int cv_folds, std::optional<double> proj_lambda, std::optional<double> tau,
           const std::string& weighting, bool split, double tau_var) {
          QuadTarget target;
          target.G = G;
          target.tau_var = tau_var;
          if (A) {
            target.mode = QuadTarget::Mode::matrix_A;
            target.A = *A;
          }
          const auto opt = make_inference_options(alpha, lambda0, cv_folds, proj_lambda,
                                                  tau, weighting, split, tau_var);
          return qf(d, target, opt);
        },
        py::arg("data"), py::arg("G"), py::arg("A") = py::none(), HDI_INFER_ARGS,
        "Group quadratic functional; G lists X columns 1..p (intercept is column 0).");

  m.def("qf_semisupervised",
        [](const Dataset& d, const Eigen::MatrixXd& unlabeled_X, double alpha,
           std::optional<double> lambda0, int cv_folds, std::optional<double> proj_lambda,
           std::optional<double> tau, const std::string& weighting, bool split,
           double tau_var) {
          const auto opt = make_inference_options(alpha, lambda0, cv_folds, proj_lambda,
                                                  tau, weighting, split, tau_var);
          return qf_semisupervised(d, unlabeled_X, opt);
        },
        py::arg("data"), py::arg("unlabeled_X"), HDI_INFER_ARGS);

  m.def("inner_product",
        [](const Dataset& d1, const Dataset& d2, double alpha,
           std::optional<double> lambda0, int cv_folds, std::optional<double> proj_lambda,
           std::optional<double> tau, const std::string& weighting, bool split,
           double tau_var) {
          const auto opt = make_inference_options(alpha, lambda0, cv_folds, proj_lambda,
                                                  tau, weighting, split, tau_var);
          return inner_product(d1, d2, opt);
        },
        py::arg("data1"), py::arg("data2"), HDI_INFER_ARGS);

#undef HDI_INFER_ARGS

  py::class_<TestStatisticSet>(m, "TestStatisticSet")
      .def_readonly("W", &TestStatisticSet::W)
      .def_property_readonly("family",
                             [](const TestStatisticSet& s) {
                               return s.family == NullFamily::std_normal_folded
                                          ? std::string("std_normal_folded")
                                          : "chi_square(" + std::to_string(s.chi_df) + ")";
                             })
      .def_readonly("S", &TestStatisticSet::S)
      .def_property_readonly("valid",
                             [](const TestStatisticSet& s) {
                               std::vector<bool> v(s.valid.begin(), s.valid.end());
                               return v;
                             })
      .def_readonly("warnings", &TestStatisticSet::warnings);

  py::class_<GapGrouping>(m, "GapGrouping")
      .def_readonly("K", &GapGrouping::K)
      .def_readonly("splits", &GapGrouping::splits)
      .def_readonly("sizes", &GapGrouping::sizes)
      .def_readonly("pi_hat", &GapGrouping::pi_hat)
      .def_readonly("weights", &GapGrouping::weights);

  py::class_<TestingOutcome>(m, "TestingOutcome")
      .def_readonly("N", &TestingOutcome::N)
      .def_readonly("t_hat", &TestingOutcome::t_hat)
      .def_readonly("rejected", &TestingOutcome::rejected)
      .def_readonly("fdp_estimate", &TestingOutcome::fdp_estimate)
      .def_readonly("alpha", &TestingOutcome::alpha)
      .def_readonly("procedure", &TestingOutcome::procedure)
      .def_readonly("grouping", &TestingOutcome::grouping)
      .def_readonly("warnings", &TestingOutcome::warnings);

  m.def("one_sample_stats",
        [](const Dataset& d, std::optional<double> inner_lambda) {
          MtOptions opt;
          opt.inner_lambda = inner_lambda;
          return one_sample_stats(d, opt);
        },
        py::arg("data"), py::arg("inner_lambda") = py::none());
  m.def("two_sample_stats",
        [](const Dataset& d1, const Dataset& d2, std::optional<double> inner_lambda) {
          MtOptions opt;
          opt.inner_lambda = inner_lambda;
          return two_sample_stats(d1, d2, opt);
        },
        py::arg("data1"), py::arg("data2"), py::arg("inner_lambda") = py::none());
  m.def("multivariate_stats",
        [](const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const GroupFit& fit,
           std::optional<double> inner_lambda) {
          MtOptions opt;
          opt.inner_lambda = inner_lambda;
          return multivariate_stats(X, Y, fit, opt);
        },
        py::arg("X"), py::arg("Y"), py::arg("fit"), py::arg("inner_lambda") = py::none());
  m.def("logistic_stats",
        [](const Dataset& d, std::optional<double> inner_lambda) {
          MtOptions opt;
          opt.inner_lambda = inner_lambda;
          return logistic_stats(d, opt);
        },
        py::arg("data"), py::arg("inner_lambda") = py::none());

  m.def("normal_transform", &normal_transform, py::arg("stats"));
  m.def("fdr_threshold", &fdr_threshold, py::arg("N"), py::arg("alpha"),
        "Capped threshold search (CLI procedure name: alg1).");
  m.def("estimate_nonnull_proportion", &estimate_nonnull_proportion, py::arg("pvals"),
        py::arg("delta") = 0.01);
  m.def("gap",
        [](const Eigen::VectorXd& N, std::optional<Eigen::VectorXd> S, double alpha) {
          return gap_procedure(N, S, alpha);
        },
        py::arg("N"), py::arg("S") = py::none(), py::arg("alpha") = 0.1,
        "Grouping/adjusting/pooling with proper group weights.");

  m.def("run_experiment",
        [](const py::dict& kwargs) {
          std::string text;
          for (auto item : kwargs)
            text += py::str(item.first).cast<std::string>() + " = " +
                    py::str(item.second).cast<std::string>() + "\n";
          const SimSpec spec = parse_sim_spec(text);
          const ExperimentReport rep = run_experiment(spec, /*check=*/true);
          return json_to_py(rep.data);
        },
        py::arg("spec"),
        "Replicated synthetic experiment; spec is a dict of SimSpec keys.");

  m.def("generate_synthetic",
        [](const py::dict& kwargs, int replicate) {
          std::string text;
          for (auto item : kwargs)
            text += py::str(item.first).cast<std::string>() + " = " +
                    py::str(item.second).cast<std::string>() + "\n";
          const SimSpec spec = parse_sim_spec(text);
          const SynthData d = generate_synthetic(spec, replicate);
          py::dict out;
          out["X"] = d.d1->X();
          out["y"] = d.d1->y();
          out["beta"] = d.beta1;
          out["support"] = d.support;
          if (d.d2) {
            out["X2"] = d.d2->X();
            out["y2"] = d.d2->y();
            out["beta2"] = d.beta2;
          }
          return out;
        },
        py::arg("spec"), py::arg("replicate") = 0);

  m.def("norm_quantile", &norm_quantile, py::arg("p"));
  m.def("chi2_cdf", &chi2_cdf, py::arg("x"), py::arg("df"));
}
