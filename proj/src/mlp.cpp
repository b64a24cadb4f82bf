#include "urgency/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "urgency/error.hpp"

namespace urgency {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Binary cross-entropy of sigmoid(z) against y, computed from the logit.
double logistic_loss(double z, double y) {
  return std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z)));
}

struct Batch {
  RowMatrix z1, a1, z2, a2;
  Eigen::VectorXd z3;
  RowMatrix mask1, mask2;  // empty when dropout is off
};

void check_arity(const MlpModel& model, const SparseFeatureMatrix& x) {
  if (x.n_cols() != model.n_features) {
    throw DataError("network expects " + std::to_string(model.n_features) + " features, got " +
                    std::to_string(x.n_cols()));
  }
}

RowMatrix draw_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
  const auto flat = dropout_mask(static_cast<std::size_t>(rows * cols), rate, rng);
  return Eigen::Map<const RowMatrix>(flat.data(), rows, cols);
}

Batch forward(const MlpParams& p, const SparseFeatureMatrix& x, std::span<const std::size_t> rows,
              double rate, Rng* rng) {
  const auto b = static_cast<Eigen::Index>(rows.size());
  Batch out;
  out.z1 = p.biases[0].transpose().replicate(b, 1);
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto cols = x.row_cols(rows[i]);
    const auto vals = x.row_values(rows[i]);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      out.z1.row(i).noalias() += vals[k] * p.weights[0].row(cols[k]);
    }
  }
  out.a1 = out.z1.cwiseMax(0.0);
  if (rng) {
    out.mask1 = draw_mask(out.a1.rows(), out.a1.cols(), rate, *rng);
    out.a1 = out.a1.cwiseProduct(out.mask1);
  }
  out.z2 = out.a1 * p.weights[1];
  out.z2.rowwise() += p.biases[1].transpose();
  out.a2 = out.z2.cwiseMax(0.0);
  if (rng) {
    out.mask2 = draw_mask(out.a2.rows(), out.a2.cols(), rate, *rng);
    out.a2 = out.a2.cwiseProduct(out.mask2);
  }
  out.z3 = (out.a2 * p.weights[2]).col(0);
  out.z3.array() += p.biases[2](0);
  return out;
}

double output_of(MlpTask task, double z) {
  return task == MlpTask::kBinary ? sigmoid(z) : std::max(z, 0.0);
}

// Mean batch loss and its gradient with respect to the output logits.
double output_loss(MlpTask task, const Eigen::VectorXd& z3, std::span<const double> y,
                   std::span<const std::size_t> rows, Eigen::VectorXd* dz3) {
  const double scale = 1.0 / static_cast<double>(rows.size());
  double loss = 0.0;
  if (dz3) dz3->resize(z3.size());
  for (Eigen::Index i = 0; i < z3.size(); ++i) {
    const double target = y[rows[i]];
    if (task == MlpTask::kBinary) {
      loss += logistic_loss(z3(i), target);
      if (dz3) (*dz3)(i) = (sigmoid(z3(i)) - target) * scale;
    } else {
      const double diff = std::max(z3(i), 0.0) - target;
      loss += diff * diff;
      if (dz3) (*dz3)(i) = z3(i) > 0.0 ? 2.0 * diff * scale : 0.0;
    }
  }
  return loss * scale;
}

MlpParams zeros_like(const MlpParams& p) {
  MlpParams g;
  for (int l = 0; l < 3; ++l) {
    g.weights[l] = RowMatrix::Zero(p.weights[l].rows(), p.weights[l].cols());
    g.biases[l] = Eigen::VectorXd::Zero(p.biases[l].size());
  }
  return g;
}

void backward(const MlpParams& p, const SparseFeatureMatrix& x, std::span<const std::size_t> rows,
              const Batch& fwd, const Eigen::VectorXd& dz3, MlpParams& g) {
  g.weights[2].col(0).noalias() = fwd.a2.transpose() * dz3;
  g.biases[2](0) = dz3.sum();

  RowMatrix d = dz3 * p.weights[2].col(0).transpose();
  if (fwd.mask2.size()) d = d.cwiseProduct(fwd.mask2);
  d = d.cwiseProduct((fwd.z2.array() > 0.0).cast<double>().matrix());
  g.weights[1].noalias() = fwd.a1.transpose() * d;
  g.biases[1] = d.colwise().sum().transpose();

  RowMatrix d1 = d * p.weights[1].transpose();
  if (fwd.mask1.size()) d1 = d1.cwiseProduct(fwd.mask1);
  d1 = d1.cwiseProduct((fwd.z1.array() > 0.0).cast<double>().matrix());
  g.weights[0].setZero();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto cols = x.row_cols(rows[i]);
    const auto vals = x.row_values(rows[i]);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      g.weights[0].row(cols[k]).noalias() += vals[k] * d1.row(static_cast<Eigen::Index>(i));
    }
  }
  g.biases[0] = d1.colwise().sum().transpose();
}

void validate_labels(MlpTask task, std::span<const double> y) {
  for (double v : y) {
    const bool ok = task == MlpTask::kBinary ? (v == 0.0 || v == 1.0) : (v >= 1.0 && v <= 7.0);
    if (!ok) {
      throw DataError(task == MlpTask::kBinary
                          ? "binary network labels must be 0 or 1"
                          : "regression network labels must lie in [1, 7]");
    }
  }
}

}  // namespace

std::string_view to_string(MlpTask task) {
  return task == MlpTask::kBinary ? "binary" : "regression";
}

MlpModel init_mlp(std::size_t n_features, double dropout_rate, MlpTask task, std::uint64_t seed) {
  if (n_features == 0) throw ConfigError("network needs at least one input feature");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1)");
  }
  MlpModel model;
  model.n_features = n_features;
  model.dropout_rate = dropout_rate;
  model.task = task;
  const std::array<std::size_t, 4> widths{n_features, kMlpHiddenWidth, kMlpHiddenWidth, 1};
  Rng rng(seed);
  for (int l = 0; l < 3; ++l) {
    const auto fan_in = static_cast<Eigen::Index>(widths[l]);
    const auto fan_out = static_cast<Eigen::Index>(widths[l + 1]);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    auto& w = model.params.weights[l];
    w.resize(fan_in, fan_out);
    for (Eigen::Index i = 0; i < fan_in; ++i) {
      for (Eigen::Index j = 0; j < fan_out; ++j) w(i, j) = rng.uniform(-bound, bound);
    }
    model.params.biases[l] = Eigen::VectorXd::Zero(fan_out);
  }
  return model;
}

std::vector<double> dropout_mask(std::size_t size, double rate, Rng& rng) {
  std::vector<double> mask(size, 1.0);
  if (rate <= 0.0) return mask;
  const double keep_scale = 1.0 / (1.0 - rate);
  for (auto& m : mask) m = rng.uniform() < rate ? 0.0 : keep_scale;
  return mask;
}

double mlp_loss(const MlpModel& model, const SparseFeatureMatrix& x, std::span<const double> y) {
  check_arity(model, x);
  if (x.n_rows() != y.size() || y.empty()) throw DataError("feature rows and labels differ in count");
  std::vector<std::size_t> rows(x.n_rows());
  std::iota(rows.begin(), rows.end(), 0);
  const Batch fwd = forward(model.params, x, rows, 0.0, nullptr);
  return output_loss(model.task, fwd.z3, y, rows, nullptr);
}

MlpParams mlp_gradients(const MlpModel& model, const SparseFeatureMatrix& x,
                        std::span<const double> y, double* loss) {
  check_arity(model, x);
  if (x.n_rows() != y.size() || y.empty()) throw DataError("feature rows and labels differ in count");
  std::vector<std::size_t> rows(x.n_rows());
  std::iota(rows.begin(), rows.end(), 0);
  const Batch fwd = forward(model.params, x, rows, 0.0, nullptr);
  Eigen::VectorXd dz3;
  const double value = output_loss(model.task, fwd.z3, y, rows, &dz3);
  if (loss) *loss = value;
  MlpParams g = zeros_like(model.params);
  backward(model.params, x, rows, fwd, dz3, g);
  return g;
}

MlpModel train_mlp(MlpModel model, const SparseFeatureMatrix& x, std::span<const double> y,
                   const MlpTrainConfig& config) {
  check_arity(model, x);
  if (x.n_rows() != y.size()) throw DataError("feature rows and labels differ in count");
  if (x.n_rows() == 0) throw DataError("cannot train a network on zero rows");
  if (config.epochs < 1 || config.batch_size < 1 || !(config.learning_rate > 0.0)) {
    throw ConfigError("network training needs epochs >= 1, batch_size >= 1, learning_rate > 0");
  }
  validate_labels(model.task, y);

  Rng order_rng(derive_seed(config.seed, 0));
  Rng mask_rng(derive_seed(config.seed, 1));
  std::vector<std::size_t> order(x.n_rows());
  std::iota(order.begin(), order.end(), 0);

  MlpParams grad = zeros_like(model.params);
  MlpParams first = zeros_like(model.params);
  MlpParams second = zeros_like(model.params);
  long step = 0;
  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  const double rate = model.dropout_rate;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(std::span<std::size_t>(order), order_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::span<const std::size_t> rows(order.data() + start,
                                              std::min(batch_size, order.size() - start));
      const Batch fwd = forward(model.params, x, rows, rate, rate > 0.0 ? &mask_rng : nullptr);
      Eigen::VectorXd dz3;
      const double loss = output_loss(model.task, fwd.z3, y, rows, &dz3);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "network loss became non-finite at epoch " << epoch + 1
            << " (learning rate " << config.learning_rate << ")";
        throw NumericError(msg.str());
      }
      epoch_loss += loss * static_cast<double>(rows.size());
      backward(model.params, x, rows, fwd, dz3, grad);

      ++step;
      const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(step));
      auto adam = [&](auto& param, auto& g, auto& m, auto& v) {
        m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
        v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g.cwiseProduct(g);
        param.array() -= config.learning_rate * (m.array() / c1) /
                         ((v.array() / c2).sqrt() + kAdamEps);
      };
      for (int l = 0; l < 3; ++l) {
        adam(model.params.weights[l], grad.weights[l], first.weights[l], second.weights[l]);
        adam(model.params.biases[l], grad.biases[l], first.biases[l], second.biases[l]);
      }
    }
    model.train_log.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  return model;
}

std::vector<double> predict_mlp(const MlpModel& model, const SparseFeatureMatrix& x) {
  check_arity(model, x);
  std::vector<std::size_t> rows(x.n_rows());
  std::iota(rows.begin(), rows.end(), 0);
  const Batch fwd = forward(model.params, x, rows, 0.0, nullptr);
  std::vector<double> out(x.n_rows());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = output_of(model.task, fwd.z3(static_cast<Eigen::Index>(i)));
  }
  return out;
}

std::vector<double> predict_mlp_train_mode(const MlpModel& model, const SparseFeatureMatrix& x,
                                           Rng& rng) {
  check_arity(model, x);
  std::vector<std::size_t> rows(x.n_rows());
  std::iota(rows.begin(), rows.end(), 0);
  const Batch fwd = forward(model.params, x, rows, model.dropout_rate, &rng);
  std::vector<double> out(x.n_rows());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = output_of(model.task, fwd.z3(static_cast<Eigen::Index>(i)));
  }
  return out;
}

}  // namespace urgency
