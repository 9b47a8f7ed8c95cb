#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hdi/csv.hpp"
#include "hdi/inference.hpp"
#include "hdi/model_data.hpp"
#include "hdi/multiple_testing.hpp"
#include "hdi/penalized.hpp"
#include "hdi/simulate.hpp"

namespace {

using nlohmann::json;

void write_output(const json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw hdi::invalid_input("cannot write to '" + out_path + "'");
  out << j.dump(2) << "\n";
  std::cout << "wrote " << out_path << "\n";
}

Eigen::VectorXd load_loading(const std::string& path, Eigen::Index expected) {
  const hdi::CsvTable t = hdi::read_csv(path);
  if (t.values.cols() != 1)
    throw hdi::invalid_input("loading file must contain a single column");
  if (t.values.rows() != expected)
    throw hdi::invalid_input("loading file has " + std::to_string(t.values.rows()) +
                             " entries; expected p+1 = " + std::to_string(expected) +
                             " (intercept entry first)");
  return t.values.col(0);
}

// dense numeric matrix without a header row
Eigen::MatrixXd load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw hdi::invalid_input("cannot open matrix file '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) row.push_back(std::stod(field));
    if (!rows.empty() && row.size() != rows.front().size())
      throw hdi::invalid_input("ragged rows in matrix file '" + path + "'");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw hdi::invalid_input("matrix file '" + path + "' is empty");
  Eigen::MatrixXd M(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.front().size(); ++j)
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return M;
}

std::vector<int> parse_index_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    if (field.empty()) continue;
    out.push_back(std::stoi(field));
  }
  return out;
}

std::vector<std::string> parse_name_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    if (!field.empty()) out.push_back(field);
  }
  return out;
}

struct CommonArgs {
  std::string data, data2, outcome, out;
  std::string model = "linear";
  std::string weighting = "linearization";
  double alpha = 0.05;
  std::optional<double> lambda0;
  int cv_folds = 0;
  std::uint64_t cv_seed = 1;
  std::optional<double> proj_lambda;
  std::optional<double> tau_proj;
};

void add_common(CLI::App* cmd, CommonArgs* a, bool two_sample) {
  cmd->add_option("--data", a->data, "input CSV (header row required)")->required();
  if (two_sample)
    cmd->add_option("--data2", a->data2, "second-sample CSV")->required();
  cmd->add_option("--outcome", a->outcome, "outcome column name")->required();
  cmd->add_option("--alpha", a->alpha, "two-sided level (default 0.05)");
  cmd->add_option("--out", a->out, "output JSON path (default: stdout)");
  cmd->add_option("--lambda", [a](const CLI::results_t& r) {
    a->lambda0 = std::stod(r[0]);
    return true;
  }, "lasso penalty level override");
  cmd->add_option("--cv", a->cv_folds, "cross-validation folds for the lasso penalty");
  cmd->add_option("--cv-seed", a->cv_seed, "fold-assignment seed (default 1)");
  cmd->add_option("--proj-lambda", [a](const CLI::results_t& r) {
    a->proj_lambda = std::stod(r[0]);
    return true;
  }, "projection tuning level override");
  cmd->add_option("--tau-proj", [a](const CLI::results_t& r) {
    a->tau_proj = std::stod(r[0]);
    return true;
  }, "prediction-bound tau for the logistic projection");
}

hdi::InferenceOptions make_options(const CommonArgs& a) {
  hdi::InferenceOptions opt;
  opt.alpha = a.alpha;
  opt.fit.lambda0 = a.lambda0;
  opt.fit.cv_folds = a.cv_folds;
  opt.fit.cv_seed = a.cv_seed;
  opt.proj_lambda = a.proj_lambda;
  opt.tau = a.tau_proj;
  opt.weighting = hdi::weighting_from_string(a.weighting);
  return opt;
}

json mtest_outcome_json(const hdi::TestStatisticSet& stats,
                        const hdi::TestingOutcome& oc,
                        const std::vector<std::string>& names) {
  json j;
  j["W"] = std::vector<double>(stats.W.data(), stats.W.data() + stats.W.size());
  j["N"] = std::vector<double>(oc.N.data(), oc.N.data() + oc.N.size());
  if (stats.S)
    j["S"] = std::vector<double>(stats.S->data(), stats.S->data() + stats.S->size());
  j["t_hat"] = oc.t_hat;
  std::vector<int> rejected_1based;
  for (int r : oc.rejected) rejected_1based.push_back(r + 1);
  j["rejected_indices"] = rejected_1based;
  if (!names.empty()) {
    std::vector<std::string> rn;
    for (int r : oc.rejected)
      if (static_cast<std::size_t>(r) < names.size()) rn.push_back(names[r]);
    j["rejected_names"] = rn;
  }
  j["fdp_estimate"] = oc.fdp_estimate;
  j["procedure"] = oc.procedure;
  if (oc.grouping) {
    json g;
    g["K"] = oc.grouping->K;
    g["splits"] = oc.grouping->splits;
    g["sizes"] = oc.grouping->sizes;
    g["pi_hat"] = oc.grouping->pi_hat;
    g["weights"] = oc.grouping->weights;
    j["grouping"] = g;
  }
  const auto& warn = oc.warnings.empty() ? stats.warnings : oc.warnings;
  if (!warn.empty()) j["warnings"] = warn;
  return j;
}

void print_result_summary(const hdi::InferenceResult& r) {
  std::cout << "estimate " << r.estimate << "  se " << std::sqrt(std::max(r.variance, 0.0))
            << "  " << 100.0 * (1.0 - r.alpha) << "% CI [" << r.ci_lower << ", "
            << r.ci_upper << "]";
  if (r.test) std::cout << "  test: " << (r.test->reject ? "reject" : "retain");
  std::cout << "\n";
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"debiased inference for high-dimensional regression"};
  app.require_subcommand(1);

  // ---- lf ----
  CommonArgs lf_args;
  std::string lf_loading_file;
  auto* lf_cmd = app.add_subcommand("lf", "linear functional x_new' beta");
  add_common(lf_cmd, &lf_args, false);
  lf_cmd->add_option("--model", lf_args.model, "linear|logistic");
  lf_cmd->add_option("--weighting", lf_args.weighting, "linearization|link-specific");
  lf_cmd->add_option("--loading-file", lf_loading_file,
                     "CSV column of x_new (length p+1, intercept first)")
      ->required();

  // ---- qf ----
  CommonArgs qf_args;
  std::string qf_G_list, qf_A_file, qf_unlabeled;
  double qf_tau = 1.0;
  bool qf_split = false;
  auto* qf_cmd = app.add_subcommand("qf", "quadratic functional of beta_G");
  add_common(qf_cmd, &qf_args, false);
  qf_cmd->add_option("--G", qf_G_list, "comma list of 1-based covariate indices");
  qf_cmd->add_option("--A-file", qf_A_file, "|G|x|G| matrix CSV (switches to A mode)");
  qf_cmd->add_option("--tau", qf_tau, "variance inflation tau (default 1.0)");
  qf_cmd->add_flag("--split", qf_split, "sample splitting (fit/correct halves)");
  qf_cmd->add_option("--unlabeled", qf_unlabeled,
                     "unlabeled covariate CSV: semi-supervised beta' Sigma beta");

  // ---- cate ----
  CommonArgs cate_args;
  std::string cate_loading_file;
  auto* cate_cmd = app.add_subcommand("cate", "contrast of two regression functions");
  add_common(cate_cmd, &cate_args, true);
  cate_cmd->add_option("--model", cate_args.model, "linear|logistic");
  cate_cmd->add_option("--weighting", cate_args.weighting, "linearization|link-specific");
  cate_cmd->add_option("--loading-file", cate_loading_file,
                       "CSV column of x_new (length p+1, intercept first)")
      ->required();

  // ---- innerprod ----
  CommonArgs ip_args;
  auto* ip_cmd = app.add_subcommand("innerprod", "inner product of two coefficient vectors");
  add_common(ip_cmd, &ip_args, true);

  // ---- mtest ----
  CommonArgs mt_args;
  std::string mt_mode = "one-sample", mt_procedure = "alg1";
  auto* mt_cmd = app.add_subcommand("mtest", "large-scale multiple testing");
  add_common(mt_cmd, &mt_args, false);
  mt_cmd->add_option("--data2", mt_args.data2, "second-sample CSV (two-sample mode)");
  mt_cmd->add_option("--mode", mt_mode, "one-sample|two-sample|multivariate|logistic");
  mt_cmd->add_option("--procedure", mt_procedure, "alg1|gap");

  // ---- simulate ----
  std::string sim_spec_path, sim_out;
  bool sim_check = false;
  int sim_jobs = 0;
  auto* sim_cmd = app.add_subcommand("simulate", "replicated synthetic experiments");
  sim_cmd->add_option("--spec", sim_spec_path, "flat key=value spec file")->required();
  sim_cmd->add_flag("--check", sim_check, "apply acceptance bounds; nonzero exit on failure");
  sim_cmd->add_option("--jobs", sim_jobs, "replicate worker threads");
  sim_cmd->add_option("--out", sim_out, "report JSON path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (lf_cmd->parsed()) {
      const hdi::Link link = hdi::link_from_string(lf_args.model);
      const hdi::Dataset data =
          hdi::dataset_from_csv(hdi::read_csv(lf_args.data), lf_args.outcome, link);
      const Eigen::VectorXd x_new = load_loading(lf_loading_file, data.X().cols());
      const hdi::InferenceOptions opt = make_options(lf_args);
      const hdi::InferenceResult res = link == hdi::Link::identity
                                           ? hdi::lf_linear(data, x_new, opt)
                                           : hdi::lf_logistic(data, x_new, opt);
      print_result_summary(res);
      write_output(hdi::result_to_json(res), lf_args.out);
    } else if (qf_cmd->parsed()) {
      const hdi::Dataset data = hdi::dataset_from_csv(hdi::read_csv(qf_args.data),
                                                      qf_args.outcome, hdi::Link::identity);
      hdi::InferenceOptions opt = make_options(qf_args);
      opt.tau_var = qf_tau;
      opt.sample_splitting = qf_split;
      hdi::InferenceResult res;
      if (!qf_unlabeled.empty()) {
        const hdi::CsvTable ut = hdi::read_csv(qf_unlabeled);
        res = hdi::qf_semisupervised(data, ut.values, opt);
      } else {
        if (qf_G_list.empty())
          throw hdi::invalid_input("qf requires --G (or --unlabeled for the "
                                   "semi-supervised functional)");
        hdi::QuadTarget target;
        for (int g : parse_index_list(qf_G_list)) target.G.push_back(g); // 1-based = column
        target.tau_var = qf_tau;
        if (!qf_A_file.empty()) {
          target.mode = hdi::QuadTarget::Mode::matrix_A;
          target.A = load_matrix(qf_A_file);
        }
        res = hdi::qf(data, target, opt);
      }
      print_result_summary(res);
      write_output(hdi::result_to_json(res), qf_args.out);
    } else if (cate_cmd->parsed()) {
      const hdi::Link link = hdi::link_from_string(cate_args.model);
      const hdi::Dataset d1 =
          hdi::dataset_from_csv(hdi::read_csv(cate_args.data), cate_args.outcome, link);
      const hdi::Dataset d2 =
          hdi::dataset_from_csv(hdi::read_csv(cate_args.data2), cate_args.outcome, link);
      const Eigen::VectorXd x_new = load_loading(cate_loading_file, d1.X().cols());
      const hdi::InferenceResult res = hdi::cate(d1, d2, x_new, make_options(cate_args));
      print_result_summary(res);
      write_output(hdi::result_to_json(res), cate_args.out);
    } else if (ip_cmd->parsed()) {
      const hdi::Dataset d1 = hdi::dataset_from_csv(hdi::read_csv(ip_args.data),
                                                    ip_args.outcome, hdi::Link::identity);
      const hdi::Dataset d2 = hdi::dataset_from_csv(hdi::read_csv(ip_args.data2),
                                                    ip_args.outcome, hdi::Link::identity);
      const hdi::InferenceResult res = hdi::inner_product(d1, d2, make_options(ip_args));
      print_result_summary(res);
      write_output(hdi::result_to_json(res), ip_args.out);
    } else if (mt_cmd->parsed()) {
      hdi::TestStatisticSet stats;
      std::vector<std::string> names;
      hdi::MtOptions mt_opt;
      mt_opt.outer_fit.lambda0 = mt_args.lambda0;
      mt_opt.outer_fit.cv_folds = mt_args.cv_folds;
      if (mt_mode == "one-sample") {
        const hdi::Dataset d = hdi::dataset_from_csv(hdi::read_csv(mt_args.data),
                                                     mt_args.outcome, hdi::Link::identity);
        names = d.names();
        stats = hdi::one_sample_stats(d, mt_opt);
      } else if (mt_mode == "two-sample") {
        if (mt_args.data2.empty())
          throw hdi::invalid_input("two-sample mode requires --data2");
        const hdi::Dataset d1 = hdi::dataset_from_csv(hdi::read_csv(mt_args.data),
                                                      mt_args.outcome, hdi::Link::identity);
        const hdi::Dataset d2 = hdi::dataset_from_csv(hdi::read_csv(mt_args.data2),
                                                      mt_args.outcome, hdi::Link::identity);
        names = d1.names();
        stats = hdi::two_sample_stats(d1, d2, mt_opt);
      } else if (mt_mode == "multivariate") {
        const auto mr = hdi::multiresponse_from_csv(hdi::read_csv(mt_args.data),
                                                    parse_name_list(mt_args.outcome));
        names = mr.covariate_names;
        const hdi::GroupFit gf = hdi::fit_group_lasso(mr.X, mr.Y, mt_opt.outer_fit);
        stats = hdi::multivariate_stats(mr.X, mr.Y, gf, mt_opt);
      } else if (mt_mode == "logistic") {
        const hdi::Dataset d = hdi::dataset_from_csv(hdi::read_csv(mt_args.data),
                                                     mt_args.outcome, hdi::Link::logistic);
        names = d.names();
        stats = hdi::logistic_stats(d, mt_opt);
      } else {
        throw hdi::invalid_input("unknown mtest mode '" + mt_mode + "'");
      }
      const Eigen::VectorXd N = hdi::normal_transform(stats);
      hdi::TestingOutcome oc;
      if (mt_procedure == "alg1")
        oc = hdi::fdr_threshold(N, mt_args.alpha);
      else if (mt_procedure == "gap")
        oc = hdi::gap_procedure(N, stats.S, mt_args.alpha);
      else
        throw hdi::invalid_input("unknown procedure '" + mt_procedure + "'");
      std::cout << oc.rejected.size() << " rejections at alpha " << mt_args.alpha
                << " (t_hat " << oc.t_hat << ", estimated FDP " << oc.fdp_estimate
                << ")\n";
      write_output(mtest_outcome_json(stats, oc, names), mt_args.out);
    } else if (sim_cmd->parsed()) {
      hdi::SimSpec spec = hdi::parse_sim_spec_file(sim_spec_path);
      if (sim_jobs > 0) spec.jobs = sim_jobs;
      const hdi::ExperimentReport report = hdi::run_experiment(spec, sim_check);
      std::cout << "target " << spec.target << "  R " << spec.R << "\n";
      for (const auto& [key, value] : report.data["metrics"].items())
        std::cout << "  " << key << ": " << value.dump() << "\n";
      write_output(report.data, sim_out);
      if (sim_check && !report.pass) {
        std::cerr << "acceptance bounds violated\n";
        return 2;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
