#ifndef URGENCY_MODEL_IO_HPP_
#define URGENCY_MODEL_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "urgency/crossval.hpp"
#include "urgency/learner.hpp"

namespace urgency {

inline constexpr int kModelFormatVersion = 1;

struct ModelFile {
  int format_version = kModelFormatVersion;
  LearnerSpec spec;
  FeatureState features;
  TrainedModel model;
  std::uint64_t seed = 42;
  std::string dataset_sha256;
  // Last modification time of the training file (UTC, ISO-8601), so that
  // saving the same fit twice gives identical bytes.
  std::string dataset_timestamp;
};

nlohmann::json model_to_json(const ModelFile& file);
// Validates the version and every shape; throws DataError on problems.
ModelFile model_from_json(const nlohmann::json& doc);

void save_model(const ModelFile& file, const std::filesystem::path& path);
ModelFile load_model(const std::filesystem::path& path);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);
std::string file_timestamp_utc(const std::filesystem::path& path);

}  // namespace urgency

#endif  // URGENCY_MODEL_IO_HPP_
