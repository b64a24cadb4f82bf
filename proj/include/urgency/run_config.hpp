#ifndef URGENCY_RUN_CONFIG_HPP_
#define URGENCY_RUN_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "urgency/corpus.hpp"
#include "urgency/crossval.hpp"
#include "urgency/featurize.hpp"
#include "urgency/learner.hpp"

namespace urgency {

struct DatasetConfig {
  std::filesystem::path path;
  CorpusFormat format = CorpusFormat::kUpenn;
  ColumnMap columns;
};

struct RunConfig {
  DatasetConfig train;
  std::optional<DatasetConfig> test;
  FeatureKind feature_kind = FeatureKind::kText;
  FeaturizerConfig featurizer;
  std::filesystem::path embeddings;       // train-corpus embeddings
  std::filesystem::path test_embeddings;  // test-corpus embeddings (transfer)
  LearnerSpec learner;
  int k_folds = 10;
  std::uint64_t seed = 42;
  int jobs = 1;
  std::filesystem::path out_dir = "out";

  // Throws ConfigError on any inconsistency, before compute starts.
  void validate(bool needs_train = true) const;
};

// Parses a TOML document; unknown keys are errors.
RunConfig parse_run_config(std::string_view toml_text);
RunConfig load_run_config(const std::filesystem::path& path);

// Fully resolved config as TOML, for report provenance.
std::string to_toml(const RunConfig& config);

}  // namespace urgency

#endif  // URGENCY_RUN_CONFIG_HPP_
