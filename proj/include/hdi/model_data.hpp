#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace hdi {

struct invalid_input : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct solver_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Link { identity, logistic };

inline const char* link_name(Link link) {
  return link == Link::identity ? "identity" : "logistic";
}

Link link_from_string(const std::string& name);

/// Value and first two derivatives of the link at a point.
struct LinkValues {
  double value;
  double d1;
  double d2;
};

/// Evaluate the link at z. For the logistic link this uses the overflow-safe
/// branch (exp(z)/(1+exp(z)) for z<0, 1/(1+exp(-z)) otherwise) and satisfies
/// h' = h(1-h), h'' = h'(1-2h).
LinkValues link_eval(Link link, double z);

/// Regression sample: design matrix with a leading all-ones intercept column,
/// outcome vector, and link designation. Immutable after construction; build
/// one through validate_dataset so the invariants below hold.
///   - X.col(0) is identically 1
///   - n >= 2, p >= 1
///   - logistic outcomes are coded {0,1}
///   - no non-intercept column has zero sample variance
class Dataset {
public:
  const Eigen::MatrixXd& X() const { return X_; }
  const Eigen::VectorXd& y() const { return y_; }
  Link link() const { return link_; }
  Eigen::Index n() const { return X_.rows(); }
  Eigen::Index p() const { return X_.cols() - 1; }

  /// Column scales ||X_j||_2 / sqrt(n); entry 0 (intercept) is 1.
  const Eigen::VectorXd& column_scales() const { return scales_; }

  /// Names of the covariate columns (empty when not ingested from CSV).
  const std::vector<std::string>& names() const { return names_; }

private:
  friend Dataset validate_dataset(const Eigen::MatrixXd&, const Eigen::VectorXd&,
                                  Link, bool, std::vector<std::string>);
  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  Link link_ = Link::identity;
  Eigen::VectorXd scales_;
  std::vector<std::string> names_;
};

/// Validate raw inputs and build a Dataset. When prepend_intercept is true the
/// ones column is added in front of the supplied covariates; otherwise column
/// 0 of X must already be identically one. Throws invalid_input on dimension
/// mismatch, non-finite entries, constant non-intercept columns, or non-binary
/// outcomes under the logistic link.
Dataset validate_dataset(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         Link link, bool prepend_intercept = true,
                         std::vector<std::string> names = {});

} // namespace hdi
