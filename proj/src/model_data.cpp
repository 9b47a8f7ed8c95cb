#include "hdi/model_data.hpp"

#include <cmath>

namespace hdi {

Link link_from_string(const std::string& name) {
  if (name == "identity" || name == "linear") return Link::identity;
  if (name == "logistic") return Link::logistic;
  throw invalid_input("unknown link '" + name + "' (expected identity|logistic)");
}

LinkValues link_eval(Link link, double z) {
  if (!std::isfinite(z)) throw invalid_input("link_eval: z must be finite");
  if (link == Link::identity) return {z, 1.0, 0.0};
  double h;
  if (z < 0.0) {
    const double e = std::exp(z);
    h = e / (1.0 + e);
  } else {
    h = 1.0 / (1.0 + std::exp(-z));
  }
  const double d1 = h * (1.0 - h);
  return {h, d1, d1 * (1.0 - 2.0 * h)};
}

Dataset validate_dataset(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         Link link, bool prepend_intercept,
                         std::vector<std::string> names) {
  if (X.rows() != y.size())
    throw invalid_input("validate_dataset: X has " + std::to_string(X.rows()) +
                        " rows but y has " + std::to_string(y.size()) + " entries");
  Dataset d;
  d.link_ = link;
  if (prepend_intercept) {
    d.X_.resize(X.rows(), X.cols() + 1);
    d.X_.col(0).setOnes();
    d.X_.rightCols(X.cols()) = X;
  } else {
    d.X_ = X;
  }
  d.y_ = y;

  const Eigen::Index n = d.X_.rows();
  const Eigen::Index m = d.X_.cols();
  if (n < 2) throw invalid_input("validate_dataset: need n >= 2 observations");
  if (m < 2) throw invalid_input("validate_dataset: need p >= 1 covariates");
  if (!d.X_.allFinite() || !d.y_.allFinite())
    throw invalid_input("validate_dataset: non-finite entries in the data");
  if ((d.X_.col(0).array() != 1.0).any())
    throw invalid_input("validate_dataset: column 1 must be the all-ones intercept");

  auto column_label = [&](Eigen::Index j) {
    // j indexes covariates (column j+1 of X).
    if (static_cast<std::size_t>(j) < names.size()) return "'" + names[j] + "'";
    return std::to_string(j + 1);
  };

  d.scales_.resize(m);
  d.scales_[0] = 1.0;
  for (Eigen::Index j = 1; j < m; ++j) {
    const auto col = d.X_.col(j);
    const double mean = col.mean();
    const double var = (col.array() - mean).square().sum() / static_cast<double>(n);
    if (var <= 0.0)
      throw invalid_input("validate_dataset: covariate column " + column_label(j - 1) +
                          " has zero sample variance");
    d.scales_[j] = col.norm() / std::sqrt(static_cast<double>(n));
  }

  if (link == Link::logistic) {
    for (Eigen::Index k = 0; k < n; ++k) {
      if (d.y_[k] != 0.0 && d.y_[k] != 1.0)
        throw invalid_input("validate_dataset: logistic outcome must be coded {0,1}, "
                            "found " + std::to_string(d.y_[k]) + " at row " +
                            std::to_string(k + 1));
    }
  }

  d.names_ = std::move(names);
  return d;
}

} // namespace hdi
