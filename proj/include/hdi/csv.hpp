#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "hdi/model_data.hpp"

namespace hdi {

/// Numeric table read from a CSV file (header row required, comma separated,
/// decimal-point reals, missing values rejected).
struct CsvTable {
  std::vector<std::string> names;
  Eigen::MatrixXd values; // n x #columns, file order
};

CsvTable read_csv(const std::string& path);

/// Split a table into (covariates, outcome) by outcome column name and build a
/// validated Dataset (intercept prepended; covariates keep file order). For a
/// multivariate response pass the outcome names comma separated and use
/// split_outcomes instead.
Dataset dataset_from_csv(const CsvTable& table, const std::string& outcome, Link link);

/// Multivariate variant: returns the covariate matrix with intercept column
/// prepended plus the n x D response matrix.
struct MultiResponseData {
  Eigen::MatrixXd X; // n x (p+1), leading ones column
  Eigen::MatrixXd Y; // n x D
  std::vector<std::string> covariate_names;
  std::vector<std::string> outcome_names;
};
MultiResponseData multiresponse_from_csv(const CsvTable& table,
                                         const std::vector<std::string>& outcomes);

} // namespace hdi
