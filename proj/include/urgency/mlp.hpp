#ifndef URGENCY_MLP_HPP_
#define URGENCY_MLP_HPP_

#include <Eigen/Core>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "urgency/featurize.hpp"
#include "urgency/random.hpp"

namespace urgency {

enum class MlpTask { kRegression, kBinary };

std::string_view to_string(MlpTask task);

inline constexpr std::size_t kMlpHiddenWidth = 128;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Three dense layers; weights[l] is fan_in x fan_out, so a layer computes
// h * weights[l] + biases[l] on row vectors.
struct MlpParams {
  std::array<RowMatrix, 3> weights;
  std::array<Eigen::VectorXd, 3> biases;
};

struct MlpModel {
  std::size_t n_features = 0;
  double dropout_rate = 0.85;
  MlpTask task = MlpTask::kRegression;
  MlpParams params;
  std::vector<double> train_log;  // mean training loss per epoch
};

struct MlpTrainConfig {
  int epochs = 100;
  int batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 42;
};

MlpModel init_mlp(std::size_t n_features, double dropout_rate, MlpTask task, std::uint64_t seed);

// Inverted dropout mask: each entry is 0 with probability rate, else 1 / (1 - rate).
std::vector<double> dropout_mask(std::size_t size, double rate, Rng& rng);

// Mean loss over all rows without dropout: squared error or binary cross-entropy.
double mlp_loss(const MlpModel& model, const SparseFeatureMatrix& x, std::span<const double> y);

// Backpropagated gradient of mlp_loss; loss is written to *loss when given.
MlpParams mlp_gradients(const MlpModel& model, const SparseFeatureMatrix& x,
                        std::span<const double> y, double* loss = nullptr);

MlpModel train_mlp(MlpModel model, const SparseFeatureMatrix& x, std::span<const double> y,
                   const MlpTrainConfig& config = {});

std::vector<double> predict_mlp(const MlpModel& model, const SparseFeatureMatrix& x);

// Forward pass with freshly drawn dropout masks, as during training.
std::vector<double> predict_mlp_train_mode(const MlpModel& model, const SparseFeatureMatrix& x,
                                           Rng& rng);

}  // namespace urgency

#endif  // URGENCY_MLP_HPP_
