#include "urgency/linear.hpp"

#include <spdlog/spdlog.h>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "urgency/error.hpp"

namespace urgency {

namespace {

LinearModel solve_penalized(const SparseFeatureMatrix& x, std::span<const double> y,
                            double alpha) {
  const std::size_t n = x.n_rows();
  const std::size_t d = x.n_cols();
  if (n != y.size()) throw DataError("feature rows and labels differ in count");
  if (n < 2) throw DataError("linear regression needs at least 2 rows");
  if (alpha < 0.0 || !std::isfinite(alpha)) throw ConfigError("ridge alpha must be >= 0");
  for (double v : y) {
    if (!std::isfinite(v)) throw DataError("non-finite label");
  }

  // Bias-augmented Gram matrix; the intercept is the last coordinate.
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d + 1, d + 1);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d + 1);
  for (std::size_t r = 0; r < n; ++r) {
    const auto cols = x.row_cols(r);
    const auto vals = x.row_values(r);
    for (std::size_t a = 0; a < cols.size(); ++a) {
      const double va = vals[a];
      rhs(cols[a]) += va * y[r];
      gram(cols[a], d) += va;
      for (std::size_t b = a; b < cols.size(); ++b) gram(cols[a], cols[b]) += va * vals[b];
    }
    rhs(d) += y[r];
  }
  gram(d, d) = static_cast<double>(n);
  gram.triangularView<Eigen::StrictlyLower>() = gram.transpose();
  for (std::size_t j = 0; j < d; ++j) gram(j, j) += alpha;

  LinearModel model;
  model.ridge_alpha = alpha;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success || llt.rcond() < 1.0 / kSingularConditionLimit) {
    spdlog::warn("Gram matrix numerically singular ({}x{}); adding {} to the diagonal", d + 1,
                 d + 1, kGramJitter);
    gram.diagonal().array() += kGramJitter;
    llt.compute(gram);
    model.degenerate = true;
    if (llt.info() != Eigen::Success) {
      throw NumericError("Gram matrix is not positive definite even after jitter");
    }
  }
  const Eigen::VectorXd solution = llt.solve(rhs);
  if (!solution.allFinite()) throw NumericError("least-squares solution is not finite");
  model.weights.assign(solution.data(), solution.data() + d);
  model.bias = solution(d);
  return model;
}

}  // namespace

LinearModel fit_linear(const SparseFeatureMatrix& x, std::span<const double> y) {
  return solve_penalized(x, y, 0.0);
}

LinearModel fit_ordinal_ridge(const SparseFeatureMatrix& x, std::span<const double> y,
                              double alpha) {
  LinearModel model = solve_penalized(x, y, alpha);
  model.clamp_range = std::pair{1.0, 7.0};
  return model;
}

std::vector<double> predict_linear(const LinearModel& model, const SparseFeatureMatrix& x) {
  if (x.n_cols() != model.weights.size()) {
    throw DataError("linear model expects " + std::to_string(model.weights.size()) +
                    " features, got " + std::to_string(x.n_cols()));
  }
  std::vector<double> out(x.n_rows());
  for (std::size_t r = 0; r < x.n_rows(); ++r) {
    double v = x.row_dot(r, model.weights) + model.bias;
    if (model.clamp_range) v = std::clamp(v, model.clamp_range->first, model.clamp_range->second);
    out[r] = v;
  }
  return out;
}

}  // namespace urgency
