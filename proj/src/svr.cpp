#include "urgency/svr.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>

#include "urgency/error.hpp"

namespace urgency {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTau = 1e-12;

// Rows of the training kernel matrix with least-recently-used eviction.
class KernelCache {
 public:
  KernelCache(const SparseFeatureMatrix& x, double gamma, double capacity_mb)
      : x_(x), gamma_(gamma), rows_(x.n_rows()), where_(x.n_rows()), dense_(x.n_cols(), 0.0) {
    const double row_bytes = static_cast<double>(x.n_rows()) * sizeof(double);
    capacity_ = std::max<std::size_t>(
        2, static_cast<std::size_t>(capacity_mb * 1024.0 * 1024.0 / std::max(row_bytes, 1.0)));
    sq_norm_.resize(x.n_rows());
    for (std::size_t r = 0; r < x.n_rows(); ++r) sq_norm_[r] = x.row_squared_norm(r);
  }

  std::span<const double> row(std::size_t i) {
    if (!rows_[i].empty()) {
      lru_.splice(lru_.begin(), lru_, where_[i]);
      return rows_[i];
    }
    if (lru_.size() >= capacity_) {
      const std::size_t victim = lru_.back();
      lru_.pop_back();
      rows_[victim].clear();
      rows_[victim].shrink_to_fit();
    }
    compute(i);
    lru_.push_front(i);
    where_[i] = lru_.begin();
    return rows_[i];
  }

  double diagonal(std::size_t) const { return 1.0; }

 private:
  void compute(std::size_t i) {
    const auto cols = x_.row_cols(i);
    const auto vals = x_.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) dense_[cols[k]] = vals[k];
    auto& out = rows_[i];
    out.resize(x_.n_rows());
    for (std::size_t j = 0; j < x_.n_rows(); ++j) {
      const double dist = std::max(0.0, sq_norm_[i] + sq_norm_[j] - 2.0 * x_.row_dot(j, dense_));
      out[j] = std::exp(-gamma_ * dist);
    }
    for (auto c : cols) dense_[c] = 0.0;
  }

  const SparseFeatureMatrix& x_;
  double gamma_;
  std::size_t capacity_;
  std::vector<std::vector<double>> rows_;
  std::vector<std::list<std::size_t>::iterator> where_;
  std::list<std::size_t> lru_;
  std::vector<double> dense_;
  std::vector<double> sq_norm_;
};

double sparse_dot(const SparseFeatureMatrix& a, std::size_t ra, const SparseFeatureMatrix& b,
                  std::size_t rb) {
  const auto ca = a.row_cols(ra);
  const auto va = a.row_values(ra);
  const auto cb = b.row_cols(rb);
  const auto vb = b.row_values(rb);
  double sum = 0.0;
  std::size_t i = 0, j = 0;
  while (i < ca.size() && j < cb.size()) {
    if (ca[i] < cb[j]) {
      ++i;
    } else if (cb[j] < ca[i]) {
      ++j;
    } else {
      sum += va[i++] * vb[j++];
    }
  }
  return sum;
}

}  // namespace

double rbf_kernel(std::span<const double> u, std::span<const double> v, double gamma) {
  if (u.size() != v.size()) throw DataError("rbf_kernel: vectors differ in length");
  if (!(gamma > 0.0)) throw ConfigError("rbf_kernel: gamma must be positive");
  double dist = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - v[i];
    dist += d * d;
  }
  return std::exp(-gamma * dist);
}

double auto_gamma(const SparseFeatureMatrix& x) {
  const double d = static_cast<double>(x.n_cols());
  const double cells = static_cast<double>(x.n_rows()) * d;
  if (cells == 0.0) throw DataError("auto gamma on an empty matrix");
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t r = 0; r < x.n_rows(); ++r) {
    for (double v : x.row_values(r)) {
      sum += v;
      sum_sq += v * v;
    }
  }
  const double mean = sum / cells;
  const double var = sum_sq / cells - mean * mean;
  return var > 0.0 ? 1.0 / (d * var) : 1.0 / d;
}

// Dual in libsvm's minimization form over 2n variables: the first n carry
// sign +1 (alpha), the last n sign -1 (alpha*).
//   min 1/2 b'Qb + p'b,  Q_st = s_s s_t K(s mod n, t mod n),
//   p_t = eps - y_t (t < n), eps + y_t (t >= n),  sum_t s_t b_t = 0,  0 <= b <= C.
SvrModel fit_svr(const SparseFeatureMatrix& x, std::span<const double> y,
                 const SvrConfig& config, SvrDualSolution* dual) {
  const std::size_t n = x.n_rows();
  if (n != y.size()) throw DataError("feature rows and labels differ in count");
  if (n < 2) throw DataError("support vector regression needs at least 2 rows");
  for (double v : y) {
    if (!std::isfinite(v)) throw DataError("support vector regression: non-finite label");
  }
  if (!(config.c > 0.0) || !(config.epsilon >= 0.0) || !(config.tol > 0.0)) {
    throw ConfigError("invalid SVR hyperparameters (need C > 0, epsilon >= 0, tol > 0)");
  }
  const double gamma = config.gamma ? *config.gamma : auto_gamma(x);
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("SVR gamma must be positive");

  const std::size_t m = 2 * n;
  const double cap = config.c;
  std::vector<double> beta(m, 0.0);
  std::vector<double> grad(m), linear(m);
  std::vector<signed char> sign(m);
  for (std::size_t t = 0; t < n; ++t) {
    sign[t] = 1;
    sign[t + n] = -1;
    linear[t] = config.epsilon - y[t];
    linear[t + n] = config.epsilon + y[t];
  }
  grad = linear;

  KernelCache cache(x, gamma, config.cache_mb);
  const std::size_t max_iter = config.max_iter ? config.max_iter : 200 * n;

  auto objective = [&] {
    double f = 0.0;
    for (std::size_t t = 0; t < m; ++t) f += beta[t] * (grad[t] + linear[t]);
    return 0.5 * f;
  };
  auto in_up = [&](std::size_t t) { return sign[t] > 0 ? beta[t] < cap : beta[t] > 0.0; };
  auto in_low = [&](std::size_t t) { return sign[t] > 0 ? beta[t] > 0.0 : beta[t] < cap; };

  SvrTrainLog log;
  double previous = objective();
  std::size_t iter = 0;
  for (;; ++iter) {
    // Maximal violating pair.
    double g_max = -kInf, g_min = kInf;
    std::size_t i = m, j = m;
    for (std::size_t t = 0; t < m; ++t) {
      const double v = -sign[t] * grad[t];
      if (in_up(t) && v > g_max) {
        g_max = v;
        i = t;
      }
      if (in_low(t) && v < g_min) {
        g_min = v;
        j = t;
      }
    }
    log.max_violation = (i < m && j < m) ? g_max - g_min : 0.0;
    if (i == m || j == m || log.max_violation < config.tol) break;
    if (iter >= max_iter) {
      log.hit_iteration_cap = true;
      spdlog::warn("SVR stopped at the iteration cap ({}) with KKT violation {:.3g} > tol {:.3g}",
                   max_iter, log.max_violation, config.tol);
      break;
    }

    const std::size_t ki = i % n, kj = j % n;
    const auto row_i = cache.row(ki);
    const auto row_j = cache.row(kj);
    const double q_ii = cache.diagonal(ki);
    const double q_jj = cache.diagonal(kj);
    const double q_ij = sign[i] * sign[j] * row_i[kj];
    const double old_i = beta[i], old_j = beta[j];

    if (sign[i] != sign[j]) {
      double quad = q_ii + q_jj + 2.0 * q_ij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = beta[i] - beta[j];
      beta[i] += delta;
      beta[j] += delta;
      if (diff > 0.0) {
        if (beta[j] < 0.0) {
          beta[j] = 0.0;
          beta[i] = diff;
        }
      } else if (beta[i] < 0.0) {
        beta[i] = 0.0;
        beta[j] = -diff;
      }
      if (diff > 0.0) {
        if (beta[i] > cap) {
          beta[i] = cap;
          beta[j] = cap - diff;
        }
      } else if (beta[j] > cap) {
        beta[j] = cap;
        beta[i] = cap + diff;
      }
    } else {
      double quad = q_ii + q_jj - 2.0 * q_ij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = beta[i] + beta[j];
      beta[i] -= delta;
      beta[j] += delta;
      if (sum > cap) {
        if (beta[i] > cap) {
          beta[i] = cap;
          beta[j] = sum - cap;
        }
      } else if (beta[j] < 0.0) {
        beta[j] = 0.0;
        beta[i] = sum;
      }
      if (sum > cap) {
        if (beta[j] > cap) {
          beta[j] = cap;
          beta[i] = sum - cap;
        }
      } else if (beta[i] < 0.0) {
        beta[i] = 0.0;
        beta[j] = sum;
      }
    }

    const double di = beta[i] - old_i;
    const double dj = beta[j] - old_j;
    for (std::size_t t = 0; t < m; ++t) {
      const std::size_t kt = t % n;
      grad[t] += sign[t] * (sign[i] * row_i[kt] * di + sign[j] * row_j[kt] * dj);
    }

    if (config.check_monotone) {
      const double current = objective();
      // Minimization form: the objective must not increase.
      if (current > previous + 1e-12 * std::max(1.0, std::abs(previous))) {
        throw NumericError("SMO dual objective decreased at iteration " + std::to_string(iter));
      }
      previous = current;
    }
  }
  log.iterations = iter;

  // Bias from free variables, or the midpoint of the feasible interval.
  double upper = kInf, lower = -kInf, free_sum = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < m; ++t) {
    const double yg = sign[t] * grad[t];
    if (beta[t] >= cap) {
      if (sign[t] < 0) upper = std::min(upper, yg); else lower = std::max(lower, yg);
    } else if (beta[t] <= 0.0) {
      if (sign[t] > 0) upper = std::min(upper, yg); else lower = std::max(lower, yg);
    } else {
      ++n_free;
      free_sum += yg;
    }
  }
  const double rho = n_free > 0 ? free_sum / static_cast<double>(n_free) : (upper + lower) / 2.0;

  SvrModel model;
  model.gamma = gamma;
  model.c = cap;
  model.epsilon = config.epsilon;
  model.n_features = x.n_cols();
  model.bias = -rho;
  model.train_log = log;
  model.support_vectors = SparseFeatureMatrix(x.n_cols());
  for (std::size_t t = 0; t < n; ++t) {
    const double coef = beta[t] - beta[t + n];
    if (coef != 0.0) {
      model.support_vectors.append_row(x.row_cols(t), x.row_values(t));
      model.dual_coefs.push_back(coef);
    }
  }
  if (dual) {
    dual->alpha.assign(beta.begin(), beta.begin() + static_cast<std::ptrdiff_t>(n));
    dual->alpha_star.assign(beta.begin() + static_cast<std::ptrdiff_t>(n), beta.end());
    dual->objective = -objective();
  }
  return model;
}

std::vector<double> predict_svr(const SvrModel& model, const SparseFeatureMatrix& x) {
  if (x.n_cols() != model.n_features) {
    throw DataError("SVR model expects " + std::to_string(model.n_features) + " features, got " +
                    std::to_string(x.n_cols()));
  }
  const auto& sv = model.support_vectors;
  std::vector<double> sv_sq(sv.n_rows());
  for (std::size_t s = 0; s < sv.n_rows(); ++s) sv_sq[s] = sv.row_squared_norm(s);
  std::vector<double> out(x.n_rows());
  for (std::size_t r = 0; r < x.n_rows(); ++r) {
    const double sq = x.row_squared_norm(r);
    double sum = model.bias;
    for (std::size_t s = 0; s < sv.n_rows(); ++s) {
      const double dist = std::max(0.0, sq + sv_sq[s] - 2.0 * sparse_dot(x, r, sv, s));
      sum += model.dual_coefs[s] * std::exp(-model.gamma * dist);
    }
    out[r] = sum;
  }
  return out;
}

}  // namespace urgency
