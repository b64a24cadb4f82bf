#include <gtest/gtest.h>

#include "urgency/error.hpp"
#include "urgency/run_config.hpp"

using namespace urgency;

TEST(RunConfig, ParsesFullDocument) {
  const auto cfg = parse_run_config(R"(
seed = 7
k_folds = 5
jobs = 2
out_dir = "results"

[data]
train = "train.csv"
format = "upenn"
test = "test.csv"
test_format = "stanford"
columns = { text = "body" }

[features]
mode = "bow"
ngram_max = 2
min_df = 0.02
unitize = true

[learner]
kind = "svr"

[learner.svr]
c = 2.5
epsilon = 0.2
gamma = 0.5
)");
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(cfg.k_folds, 5);
  EXPECT_EQ(cfg.jobs, 2);
  EXPECT_EQ(cfg.out_dir, "results");
  EXPECT_EQ(cfg.train.path, "train.csv");
  EXPECT_EQ(cfg.train.columns.at("text"), "body");
  ASSERT_TRUE(cfg.test.has_value());
  EXPECT_EQ(cfg.test->format, CorpusFormat::kStanford);
  EXPECT_EQ(cfg.featurizer.mode, FeatureMode::kBow);
  EXPECT_EQ(cfg.featurizer.ngram_max, 2);
  EXPECT_EQ(cfg.featurizer.min_df, 0.02);
  EXPECT_TRUE(cfg.featurizer.unitize);
  EXPECT_EQ(cfg.learner.kind, LearnerKind::kSvr);
  EXPECT_EQ(cfg.learner.svr.c, 2.5);
  EXPECT_EQ(cfg.learner.svr.gamma, 0.5);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(RunConfig, DefaultsWhenEmpty) {
  const auto cfg = parse_run_config("");
  EXPECT_EQ(cfg.k_folds, 10);
  EXPECT_EQ(cfg.seed, 42u);
  EXPECT_EQ(cfg.learner.kind, LearnerKind::kSvr);
  EXPECT_FALSE(cfg.learner.svr.gamma.has_value());
  EXPECT_EQ(cfg.featurizer.min_df, 0.01);
  EXPECT_EQ(cfg.featurizer.max_df, 0.99);
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_NO_THROW(cfg.validate(false));
}

TEST(RunConfig, UnknownKeyNamesThePath) {
  try {
    parse_run_config("[learner.svr]\nC = 1.0\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("learner.svr.C"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_run_config("bogus = 1\n"), ConfigError);
}

TEST(RunConfig, TypeErrorsAndBadValues) {
  EXPECT_THROW(parse_run_config("seed = \"x\"\n"), ConfigError);
  EXPECT_THROW(parse_run_config("[learner]\nkind = \"svm\"\n"), ConfigError);
  EXPECT_THROW(parse_run_config("[data]\nformat = \"csv\"\n"), ConfigError);
  EXPECT_THROW(parse_run_config("[features]\nsource = \"both\"\n"), ConfigError);
  EXPECT_THROW(parse_run_config("k_folds = = 3\n"), ConfigError);
}

TEST(RunConfig, RegressorOnBinaryTaskFailsValidation) {
  const auto cfg = parse_run_config("[data]\ntrain = \"t.csv\"\n[learner]\nkind = \"lr\"\ntask = \"binary\"\n");
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(RunConfig, ExactlyOneFeatureSource) {
  auto cfg = parse_run_config("[data]\ntrain = \"t.csv\"\n[features]\nembeddings = \"e.tsv\"\n");
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = parse_run_config("[data]\ntrain = \"t.csv\"\n[features]\nsource = \"embeddings\"\n");
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = parse_run_config(
      "[data]\ntrain = \"t.csv\"\n[features]\nsource = \"embeddings\"\nembeddings = \"e.tsv\"\n");
  EXPECT_NO_THROW(cfg.validate());
}

TEST(RunConfig, TomlRoundTrip) {
  const auto cfg = parse_run_config(R"(
seed = 11
[data]
train = "a.csv"
test = "b.csv"
test_columns = { label = "Urgency" }
[features]
ngram_min = 1
ngram_max = 3
max_df = 0.5
[learner]
kind = "nn"
task = "binary"
[learner.nn]
dropout = 0.5
epochs = 12
[learner.xgb]
lambda = 2.0
)");
  const auto text = to_toml(cfg);
  const auto again = parse_run_config(text);
  EXPECT_EQ(to_toml(again), text);
  EXPECT_EQ(again.seed, 11u);
  EXPECT_EQ(again.learner.nn_dropout, 0.5);
  EXPECT_EQ(again.learner.nn.epochs, 12);
  EXPECT_EQ(again.learner.boosting.l2_lambda, 2.0);
  EXPECT_EQ(again.test->columns.at("label"), "Urgency");
  EXPECT_EQ(again.featurizer.ngram_max, 3);
}
