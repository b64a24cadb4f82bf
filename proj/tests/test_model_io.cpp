#include <gtest/gtest.h>

#include "test_support.hpp"
#include "urgency/error.hpp"
#include "urgency/model_io.hpp"

using namespace urgency;
using nlohmann::json;
using urgency::testing::TempDir;

namespace {

struct Fitted {
  ModelFile file;
  SparseFeatureMatrix x;
  std::vector<TokenizedPost> docs;
  std::vector<std::size_t> rows;
};

Fitted fit_small(LearnerKind kind, Task task) {
  const auto posts = urgency::testing::synthetic_corpus(120, 25, 77);
  Fitted out;
  out.docs = preprocess_corpus(posts);
  FeatureSource source;
  source.text.ngram_max = 2;
  out.rows.resize(posts.size());
  for (std::size_t i = 0; i < out.rows.size(); ++i) out.rows[i] = i;
  out.file.features = fit_features(source, out.docs, out.rows, &out.x);
  std::vector<double> labels;
  for (const auto& p : posts) labels.push_back(p.label.value());

  LearnerSpec spec;
  spec.kind = kind;
  spec.task = task;
  spec.forest.n_trees = 4;
  spec.boosting.n_rounds = 3;
  spec.nn.epochs = 2;
  out.file.spec = spec.with_seed(5);
  out.file.model = fit_learner(out.file.spec, out.x, labels);
  out.file.seed = 5;
  out.file.dataset_sha256 = sha256_hex("corpus");
  out.file.dataset_timestamp = "2020-01-01T00:00:00Z";
  return out;
}

}  // namespace

class ModelRoundTrip : public ::testing::TestWithParam<std::pair<LearnerKind, Task>> {};

TEST_P(ModelRoundTrip, SaveLoadIsBitExact) {
  const auto [kind, task] = GetParam();
  const auto fitted = fit_small(kind, task);
  TempDir dir;
  save_model(fitted.file, dir / "m.json");
  const ModelFile loaded = load_model(dir / "m.json");

  EXPECT_EQ(model_to_json(loaded), model_to_json(fitted.file));
  save_model(loaded, dir / "again.json");
  EXPECT_EQ(urgency::testing::read_text(dir / "m.json"), urgency::testing::read_text(dir / "again.json"));

  const auto before = predict_learner(fitted.file.spec, fitted.file.model, fitted.x);
  const auto x = apply_features(loaded.features, FeatureSource{}, fitted.docs, fitted.rows);
  EXPECT_EQ(x, fitted.x);
  const auto after = predict_learner(loaded.spec, loaded.model, x);
  EXPECT_EQ(before.value, after.value);
  EXPECT_EQ(before.score, after.score);
}

INSTANTIATE_TEST_SUITE_P(
    AllLearners, ModelRoundTrip,
    ::testing::Values(std::pair{LearnerKind::kLr, Task::kMulticlass},
                      std::pair{LearnerKind::kOrr, Task::kMulticlass},
                      std::pair{LearnerKind::kRf, Task::kMulticlass},
                      std::pair{LearnerKind::kRf, Task::kBinary},
                      std::pair{LearnerKind::kXgb, Task::kMulticlass},
                      std::pair{LearnerKind::kXgb, Task::kBinary},
                      std::pair{LearnerKind::kSvr, Task::kMulticlass},
                      std::pair{LearnerKind::kNn, Task::kMulticlass},
                      std::pair{LearnerKind::kNn, Task::kBinary},
                      std::pair{LearnerKind::kMean, Task::kMulticlass}),
    [](const auto& info) {
      return std::string(to_string(info.param.first)) + "_" +
             std::string(to_string(info.param.second));
    });

TEST(ModelIo, UnknownVersionIsRejected) {
  auto doc = model_to_json(fit_small(LearnerKind::kOrr, Task::kMulticlass).file);
  doc["format_version"] = 99;
  try {
    model_from_json(doc);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("99"), std::string::npos) << msg;
    EXPECT_NE(msg.find("supported: 1"), std::string::npos) << msg;
  }
}

TEST(ModelIo, TruncatedFileIsDataError) {
  TempDir dir;
  save_model(fit_small(LearnerKind::kOrr, Task::kMulticlass).file, dir / "m.json");
  const auto text = urgency::testing::read_text(dir / "m.json");
  urgency::testing::write_text(dir / "cut.json", text.substr(0, text.size() / 2));
  EXPECT_THROW(load_model(dir / "cut.json"), DataError);
  EXPECT_THROW(load_model(dir / "missing.json"), DataError);
}

TEST(ModelIo, ShapeMismatchIsDataError) {
  const auto base = model_to_json(fit_small(LearnerKind::kOrr, Task::kMulticlass).file);

  auto short_weights = base;
  short_weights["model"]["weights"].erase(0);
  EXPECT_THROW(model_from_json(short_weights), DataError);

  auto wrong_kind = base;
  wrong_kind["learner"] = "svr";
  EXPECT_THROW(model_from_json(wrong_kind), DataError);

  auto missing = base;
  missing.erase("featurizer");
  EXPECT_THROW(model_from_json(missing), DataError);

  auto mlp = model_to_json(fit_small(LearnerKind::kNn, Task::kBinary).file);
  mlp["model"]["weights"][1]["rows"] = 3;
  EXPECT_THROW(model_from_json(mlp), DataError);
}

TEST(ModelIo, Sha256KnownAnswer) {
  EXPECT_EQ(sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}
