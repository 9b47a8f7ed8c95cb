#include "hdi/csv.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace hdi {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim surrounding whitespace
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

} // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw invalid_input("cannot open CSV file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw invalid_input("CSV file '" + path + "' is empty");
  CsvTable t;
  t.names = split_line(line);
  if (t.names.empty()) throw invalid_input("CSV file '" + path + "' has an empty header");
  const std::size_t ncol = t.names.size();

  std::vector<double> buf;
  std::size_t nrow = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_line(line);
    if (fields.size() != ncol)
      throw invalid_input("CSV '" + path + "' line " + std::to_string(lineno) + " has " +
                          std::to_string(fields.size()) + " fields, expected " +
                          std::to_string(ncol));
    for (std::size_t j = 0; j < ncol; ++j) {
      const std::string& f = fields[j];
      if (f.empty() || f == "NA" || f == "nan" || f == "NaN")
        throw invalid_input("CSV '" + path + "' line " + std::to_string(lineno) +
                            ", column '" + t.names[j] + "': missing value");
      char* end = nullptr;
      const double v = std::strtod(f.c_str(), &end);
      if (end == f.c_str() || *end != '\0')
        throw invalid_input("CSV '" + path + "' line " + std::to_string(lineno) +
                            ", column '" + t.names[j] + "': cannot parse '" + f + "'");
      buf.push_back(v);
    }
    ++nrow;
  }
  if (nrow == 0) throw invalid_input("CSV file '" + path + "' has no data rows");
  t.values.resize(nrow, ncol);
  for (std::size_t i = 0; i < nrow; ++i)
    for (std::size_t j = 0; j < ncol; ++j)
      t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          buf[i * ncol + j];
  return t;
}

namespace {

Eigen::Index find_column(const CsvTable& table, const std::string& name) {
  const auto it = std::find(table.names.begin(), table.names.end(), name);
  if (it == table.names.end())
    throw invalid_input("outcome column '" + name + "' not found in CSV header");
  return static_cast<Eigen::Index>(it - table.names.begin());
}

} // namespace

Dataset dataset_from_csv(const CsvTable& table, const std::string& outcome, Link link) {
  const Eigen::Index oc = find_column(table, outcome);
  const Eigen::Index n = table.values.rows();
  const Eigen::Index ncol = table.values.cols();
  Eigen::MatrixXd X(n, ncol - 1);
  std::vector<std::string> names;
  Eigen::Index c = 0;
  for (Eigen::Index j = 0; j < ncol; ++j) {
    if (j == oc) continue;
    X.col(c++) = table.values.col(j);
    names.push_back(table.names[j]);
  }
  return validate_dataset(X, table.values.col(oc), link, /*prepend_intercept=*/true,
                          std::move(names));
}

MultiResponseData multiresponse_from_csv(const CsvTable& table,
                                         const std::vector<std::string>& outcomes) {
  if (outcomes.empty()) throw invalid_input("need at least one outcome column");
  std::vector<Eigen::Index> ocs;
  for (const auto& name : outcomes) ocs.push_back(find_column(table, name));

  const Eigen::Index n = table.values.rows();
  const Eigen::Index ncol = table.values.cols();
  MultiResponseData out;
  out.outcome_names = outcomes;
  out.Y.resize(n, static_cast<Eigen::Index>(ocs.size()));
  for (std::size_t d = 0; d < ocs.size(); ++d) out.Y.col(d) = table.values.col(ocs[d]);

  const Eigen::Index p = ncol - static_cast<Eigen::Index>(ocs.size());
  if (p < 1) throw invalid_input("no covariate columns left after removing outcomes");
  out.X.resize(n, p + 1);
  out.X.col(0).setOnes();
  Eigen::Index c = 1;
  for (Eigen::Index j = 0; j < ncol; ++j) {
    if (std::find(ocs.begin(), ocs.end(), j) != ocs.end()) continue;
    out.X.col(c++) = table.values.col(j);
    out.covariate_names.push_back(table.names[j]);
  }
  // reuse the dataset validation for the shared invariants
  validate_dataset(out.X.rightCols(p), out.Y.col(0), Link::identity, true,
                   out.covariate_names);
  return out;
}

} // namespace hdi
