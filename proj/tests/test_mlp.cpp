#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"
#include "urgency/error.hpp"
#include "urgency/mlp.hpp"

using namespace urgency;
using urgency::testing::dense_matrix;
using urgency::testing::random_dense;

namespace {

SparseFeatureMatrix small_inputs(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  return dense_matrix(random_dense(n, d, rng, 0.0, 1.0));
}

// Central differences on a sample of coordinates of one parameter block.
template <typename Block>
void check_block(MlpModel& model, Block& block, const Block& analytic,
                 const SparseFeatureMatrix& x, const std::vector<double>& y, Rng& pick,
                 const std::string& name) {
  const double h = 1e-6;
  const auto size = static_cast<std::size_t>(block.size());
  const std::size_t n_checks = std::min<std::size_t>(size, 25);
  for (std::size_t k = 0; k < n_checks; ++k) {
    const auto idx = static_cast<Eigen::Index>(size == n_checks ? k : pick.below(size));
    double& p = block.data()[idx];
    const double saved = p;
    p = saved + h;
    const double up = mlp_loss(model, x, y);
    p = saved - h;
    const double down = mlp_loss(model, x, y);
    p = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double exact = analytic.data()[idx];
    EXPECT_LE(std::abs(numeric - exact), 1e-4 * std::max(std::abs(numeric), std::abs(exact)) + 1e-9)
        << name << "[" << idx << "]: numeric " << numeric << " analytic " << exact;
  }
}

void check_gradients(MlpTask task, std::vector<double> y, std::uint64_t seed) {
  const auto x = small_inputs(y.size(), 7, seed);
  MlpModel model = init_mlp(7, 0.0, task, seed);
  // Nudge the output bias so regression outputs start on the active side of the ReLU.
  if (task == MlpTask::kRegression) model.params.biases[2](0) = 2.0;
  const MlpParams g = mlp_gradients(model, x, y);
  Rng pick(seed + 1);
  for (int l = 0; l < 3; ++l) {
    check_block(model, model.params.weights[l], g.weights[l], x, y, pick,
                "weights" + std::to_string(l));
    check_block(model, model.params.biases[l], g.biases[l], x, y, pick,
                "biases" + std::to_string(l));
  }
}

}  // namespace

TEST(Mlp, LayerShapes) {
  const auto model = init_mlp(774, 0.85, MlpTask::kRegression, 1);
  EXPECT_EQ(model.params.weights[0].rows(), 774);
  EXPECT_EQ(model.params.weights[0].cols(), 128);
  EXPECT_EQ(model.params.weights[1].rows(), 128);
  EXPECT_EQ(model.params.weights[1].cols(), 128);
  EXPECT_EQ(model.params.weights[2].rows(), 128);
  EXPECT_EQ(model.params.weights[2].cols(), 1);
  EXPECT_EQ(model.params.biases[2].size(), 1);
}

TEST(Mlp, InitIsSeededAndBounded) {
  const auto a = init_mlp(20, 0.5, MlpTask::kBinary, 9);
  const auto b = init_mlp(20, 0.5, MlpTask::kBinary, 9);
  const auto c = init_mlp(20, 0.5, MlpTask::kBinary, 10);
  for (int l = 0; l < 3; ++l) EXPECT_EQ(a.params.weights[l], b.params.weights[l]);
  EXPECT_NE(a.params.weights[0], c.params.weights[0]);
  EXPECT_LE(a.params.weights[0].cwiseAbs().maxCoeff(), 1.0 / std::sqrt(20.0));
  EXPECT_LE(a.params.weights[1].cwiseAbs().maxCoeff(), 1.0 / std::sqrt(128.0));
}

TEST(Mlp, RegressionGradientsMatchFiniteDifferences) {
  check_gradients(MlpTask::kRegression, {1.0, 3.0, 2.5, 6.0, 4.0, 7.0}, 41);
}

TEST(Mlp, BinaryGradientsMatchFiniteDifferences) {
  check_gradients(MlpTask::kBinary, {0.0, 1.0, 1.0, 0.0, 0.0, 1.0}, 42);
}

TEST(Mlp, ZeroWeightsGiveNeutralOutputs) {
  const auto x = small_inputs(3, 4, 43);
  for (auto task : {MlpTask::kRegression, MlpTask::kBinary}) {
    auto model = init_mlp(4, 0.0, task, 1);
    for (int l = 0; l < 3; ++l) {
      model.params.weights[l].setZero();
      model.params.biases[l].setZero();
    }
    const double expected = task == MlpTask::kBinary ? 0.5 : 0.0;
    for (double v : predict_mlp(model, x)) EXPECT_EQ(v, expected);
  }
}

TEST(Mlp, LearnsConstantTarget) {
  const auto x = small_inputs(64, 5, 44);
  const std::vector<double> y(64, 3.0);
  auto model = init_mlp(5, 0.0, MlpTask::kRegression, 44);
  model = train_mlp(model, x, y, {.epochs = 300, .batch_size = 16, .learning_rate = 1e-2});
  for (double v : predict_mlp(model, x)) EXPECT_NEAR(v, 3.0, 0.05);
  EXPECT_LT(model.train_log.back(), model.train_log.front());
}

TEST(Mlp, SeparatesBinaryClasses) {
  Rng rng(45);
  auto rows = random_dense(200, 4, rng, 0.0, 1.0);
  std::vector<double> y(200);
  for (std::size_t i = 0; i < 200; ++i) y[i] = rows[i][0] > 0.5 ? 1.0 : 0.0;
  const auto x = dense_matrix(rows);
  auto model = init_mlp(4, 0.2, MlpTask::kBinary, 45);
  model = train_mlp(model, x, y, {.epochs = 150, .batch_size = 16, .learning_rate = 5e-3});
  const auto p = predict_mlp(model, x);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < 200; ++i) correct += (p[i] >= 0.5) == (y[i] == 1.0);
  EXPECT_GE(correct, 180u);
  for (double v : p) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Mlp, EvalModeIsDeterministicAndTrainModeIsNot) {
  const auto x = small_inputs(10, 6, 46);
  const auto model = init_mlp(6, 0.5, MlpTask::kBinary, 46);
  EXPECT_EQ(predict_mlp(model, x), predict_mlp(model, x));
  Rng a(1), b(2);
  EXPECT_NE(predict_mlp_train_mode(model, x, a), predict_mlp_train_mode(model, x, b));

  const auto no_drop = init_mlp(6, 0.0, MlpTask::kBinary, 46);
  Rng c(3);
  EXPECT_EQ(predict_mlp_train_mode(no_drop, x, c), predict_mlp(no_drop, x));
}

TEST(Mlp, DropoutMaskPreservesExpectation) {
  Rng rng(47);
  const double rate = 0.85;
  double sum = 0.0;
  std::size_t zeros = 0, total = 0;
  for (int m = 0; m < 10000; ++m) {
    for (double v : dropout_mask(kMlpHiddenWidth, rate, rng)) {
      sum += v;
      zeros += v == 0.0;
      ++total;
      if (v != 0.0) {
        EXPECT_DOUBLE_EQ(v, 1.0 / (1.0 - rate));
      }
    }
  }
  EXPECT_NEAR(sum / static_cast<double>(total), 1.0, 0.02);
  EXPECT_NEAR(static_cast<double>(zeros) / static_cast<double>(total), rate, 0.01);
}

TEST(Mlp, TrainingIsBitReproducible) {
  const auto x = small_inputs(50, 8, 48);
  std::vector<double> y(50);
  for (std::size_t i = 0; i < 50; ++i) y[i] = i % 3 == 0 ? 1.0 : 0.0;
  const MlpTrainConfig cfg{.epochs = 5, .batch_size = 8, .learning_rate = 1e-3, .seed = 7};
  const auto a = train_mlp(init_mlp(8, 0.85, MlpTask::kBinary, 7), x, y, cfg);
  const auto b = train_mlp(init_mlp(8, 0.85, MlpTask::kBinary, 7), x, y, cfg);
  for (int l = 0; l < 3; ++l) {
    EXPECT_EQ(a.params.weights[l], b.params.weights[l]);
    EXPECT_EQ(a.params.biases[l], b.params.biases[l]);
  }
  EXPECT_EQ(a.train_log, b.train_log);
}

TEST(Mlp, RejectsBadInput) {
  EXPECT_THROW(init_mlp(0, 0.5, MlpTask::kBinary, 1), ConfigError);
  EXPECT_THROW(init_mlp(3, 1.0, MlpTask::kBinary, 1), ConfigError);
  const auto x = small_inputs(4, 3, 49);
  const auto model = init_mlp(3, 0.5, MlpTask::kBinary, 1);
  EXPECT_THROW(train_mlp(model, x, std::vector<double>{0, 1, 2, 1}), DataError);
  EXPECT_THROW(train_mlp(model, x, std::vector<double>{0, 1, 1, 0}, {.epochs = 0}), ConfigError);
  EXPECT_THROW(predict_mlp(model, small_inputs(2, 5, 1)), DataError);
}

TEST(Mlp, NonFiniteLossIsNumericError) {
  const auto x = dense_matrix({{1e200, 1e200}, {1e200, 1e200}});
  const std::vector<double> y = {1.0, 2.0};
  auto model = init_mlp(2, 0.0, MlpTask::kRegression, 1);
  for (int l = 0; l < 3; ++l) model.params.weights[l] = model.params.weights[l].cwiseAbs();
  EXPECT_THROW(train_mlp(model, x, y, {.epochs = 1}), NumericError);
}
