#ifndef URGENCY_SVR_HPP_
#define URGENCY_SVR_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "urgency/featurize.hpp"

namespace urgency {

double rbf_kernel(std::span<const double> u, std::span<const double> v, double gamma);

// 1 / (n_features * variance of all matrix entries, implicit zeros
// included); 1 / n_features when that variance is zero.
double auto_gamma(const SparseFeatureMatrix& x);

struct SvrConfig {
  double c = 1.0;
  double epsilon = 0.1;
  std::optional<double> gamma;  // nullopt: auto_gamma
  double tol = 1e-3;
  // Iteration cap; 0 selects 200 * n_samples.
  std::size_t max_iter = 0;
  double cache_mb = 200.0;
  // Recomputes the dual objective after every step and throws if it drops.
  bool check_monotone = false;
};

struct SvrTrainLog {
  std::size_t iterations = 0;
  double max_violation = 0.0;
  bool hit_iteration_cap = false;
};

struct SvrModel {
  SparseFeatureMatrix support_vectors;
  std::vector<double> dual_coefs;  // alpha - alpha* per support vector
  double bias = 0.0;
  double gamma = 1.0;
  double c = 1.0;
  double epsilon = 0.1;
  std::size_t n_features = 0;
  SvrTrainLog train_log;
};

// Full dual solution, kept for verification.
struct SvrDualSolution {
  std::vector<double> alpha;       // multipliers of the upper tube constraints
  std::vector<double> alpha_star;  // multipliers of the lower tube constraints
  double objective = 0.0;          // maximized dual objective
};

SvrModel fit_svr(const SparseFeatureMatrix& x, std::span<const double> y,
                 const SvrConfig& config = {}, SvrDualSolution* dual = nullptr);

std::vector<double> predict_svr(const SvrModel& model, const SparseFeatureMatrix& x);

}  // namespace urgency

#endif  // URGENCY_SVR_HPP_
