#include "urgency/model_io.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "urgency/error.hpp"
#include "urgency/report.hpp"

namespace urgency {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { throw DataError("model file: " + what); }

template <class T>
T get(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) bad(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    bad(std::string("field '") + key + "' has the wrong type");
  }
}

// ---- sparse rows ------------------------------------------------------------

json sparse_to_json(const SparseFeatureMatrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.n_rows(); ++r) {
    const auto cols = m.row_cols(r);
    const auto vals = m.row_values(r);
    rows.push_back({{"cols", std::vector<std::uint32_t>(cols.begin(), cols.end())},
                    {"values", std::vector<double>(vals.begin(), vals.end())}});
  }
  return {{"n_cols", m.n_cols()}, {"rows", rows}};
}

SparseFeatureMatrix sparse_from_json(const json& j) {
  SparseFeatureMatrix m(get<std::size_t>(j, "n_cols"));
  for (const auto& row : get<json>(j, "rows")) {
    const auto cols = get<std::vector<std::uint32_t>>(row, "cols");
    const auto vals = get<std::vector<double>>(row, "values");
    if (cols.size() != vals.size()) bad("sparse row with mismatched columns and values");
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (cols[i] >= m.n_cols() || (i > 0 && cols[i] <= cols[i - 1])) {
        bad("sparse row columns out of range or unsorted");
      }
    }
    m.append_row(cols, vals);
  }
  return m;
}

// ---- trees --------------------------------------------------------------------

json tree_to_json(const DecisionTree& t) {
  std::vector<std::int32_t> feature, left, right;
  std::vector<double> threshold;
  json values = json::array();
  for (const auto& n : t.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    values.push_back(n.value);
  }
  return {{"max_depth", t.max_depth}, {"feature", feature}, {"threshold", threshold},
          {"left", left},           {"right", right},     {"value", values}};
}

DecisionTree tree_from_json(const json& j, std::size_t n_features, std::size_t value_width) {
  DecisionTree t;
  t.max_depth = get<int>(j, "max_depth");
  const auto feature = get<std::vector<std::int32_t>>(j, "feature");
  const auto threshold = get<std::vector<double>>(j, "threshold");
  const auto left = get<std::vector<std::int32_t>>(j, "left");
  const auto right = get<std::vector<std::int32_t>>(j, "right");
  const auto values = get<std::vector<std::vector<double>>>(j, "value");
  const std::size_t n = feature.size();
  if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n ||
      values.size() != n) {
    bad("tree arrays have inconsistent lengths");
  }
  const auto in_range = [&](std::int32_t i, std::size_t self) {
    return i > static_cast<std::int32_t>(self) && static_cast<std::size_t>(i) < n;
  };
  for (std::size_t i = 0; i < n; ++i) {
    TreeNode node;
    node.feature = feature[i];
    node.threshold = threshold[i];
    node.left = left[i];
    node.right = right[i];
    node.value = values[i];
    if (node.feature >= 0) {
      if (static_cast<std::size_t>(node.feature) >= n_features || !in_range(node.left, i) ||
          !in_range(node.right, i)) {
        bad("tree node references an invalid feature or child");
      }
    } else if (node.value.size() != value_width) {
      bad("tree leaf has the wrong value width");
    }
    t.nodes.push_back(std::move(node));
  }
  return t;
}

// ---- dense matrices -----------------------------------------------------------

json matrix_to_json(const RowMatrix& m) {
  return {{"rows", m.rows()},
          {"cols", m.cols()},
          {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

RowMatrix matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols) {
  const auto r = get<Eigen::Index>(j, "rows");
  const auto c = get<Eigen::Index>(j, "cols");
  const auto data = get<std::vector<double>>(j, "data");
  if (r != rows || c != cols || static_cast<Eigen::Index>(data.size()) != r * c) {
    bad("weight matrix has an unexpected shape");
  }
  return Eigen::Map<const RowMatrix>(data.data(), r, c);
}

// ---- per-learner payloads -----------------------------------------------------

json model_payload(const TrainedModel& model) {
  return std::visit(
      [](const auto& m) -> json {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, LinearModel>) {
          json clamp = nullptr;
          if (m.clamp_range) clamp = {m.clamp_range->first, m.clamp_range->second};
          return {{"type", "linear"},        {"weights", m.weights},
                  {"bias", m.bias},          {"clamp_range", clamp},
                  {"ridge_alpha", m.ridge_alpha}, {"degenerate", m.degenerate}};
        } else if constexpr (std::is_same_v<M, ForestModel>) {
          json trees = json::array();
          for (const auto& t : m.trees) trees.push_back(tree_to_json(t));
          return {{"type", "forest"},
                  {"n_features", m.n_features},
                  {"class_values", m.class_values},
                  {"feature_subsample", m.feature_subsample},
                  {"seed", m.seed},
                  {"trees", trees}};
        } else if constexpr (std::is_same_v<M, BoostedModel>) {
          json stages = json::array();
          for (const auto& per_class : m.stages) {
            json trees = json::array();
            for (const auto& t : per_class) trees.push_back(tree_to_json(t));
            stages.push_back(trees);
          }
          return {{"type", "boosted"},
                  {"n_features", m.n_features},
                  {"class_values", m.class_values},
                  {"learning_rate", m.learning_rate},
                  {"base_score", m.base_score},
                  {"n_rounds", m.n_rounds},
                  {"max_depth", m.max_depth},
                  {"l2_lambda", m.l2_lambda},
                  {"min_child_weight", m.min_child_weight},
                  {"seed", m.seed},
                  {"train_log", m.train_log},
                  {"stages", stages}};
        } else if constexpr (std::is_same_v<M, SvrModel>) {
          return {{"type", "svr"},
                  {"n_features", m.n_features},
                  {"gamma", m.gamma},
                  {"c", m.c},
                  {"epsilon", m.epsilon},
                  {"bias", m.bias},
                  {"dual_coefs", m.dual_coefs},
                  {"support_vectors", sparse_to_json(m.support_vectors)},
                  {"train_log",
                   {{"iterations", m.train_log.iterations},
                    {"max_violation", m.train_log.max_violation},
                    {"hit_iteration_cap", m.train_log.hit_iteration_cap}}}};
        } else if constexpr (std::is_same_v<M, MlpModel>) {
          json weights = json::array(), biases = json::array();
          for (int l = 0; l < 3; ++l) {
            weights.push_back(matrix_to_json(m.params.weights[l]));
            const auto& b = m.params.biases[l];
            biases.push_back(std::vector<double>(b.data(), b.data() + b.size()));
          }
          return {{"type", "mlp"},
                  {"n_features", m.n_features},
                  {"dropout_rate", m.dropout_rate},
                  {"task", std::string(to_string(m.task))},
                  {"weights", weights},
                  {"biases", biases},
                  {"train_log", m.train_log}};
        } else {
          return {{"type", "mean"}, {"mean", m.mean}};
        }
      },
      model);
}

std::vector<double> class_values_from(const json& j) {
  auto values = get<std::vector<double>>(j, "class_values");
  if (values.empty() || !std::is_sorted(values.begin(), values.end()) ||
      std::adjacent_find(values.begin(), values.end()) != values.end()) {
    bad("class_values must be non-empty, sorted and distinct");
  }
  return values;
}

TrainedModel payload_model(const json& j, LearnerKind kind, std::size_t n_features) {
  const auto type = get<std::string>(j, "type");
  auto expect_type = [&](const char* t) {
    if (type != t) bad("payload type '" + type + "' does not match learner " +
                       std::string(to_string(kind)));
  };
  switch (kind) {
    case LearnerKind::kLr:
    case LearnerKind::kOrr: {
      expect_type("linear");
      LinearModel m;
      m.weights = get<std::vector<double>>(j, "weights");
      m.bias = get<double>(j, "bias");
      const json& clamp = get<json>(j, "clamp_range");
      if (!clamp.is_null()) {
        const auto c = clamp.get<std::vector<double>>();
        if (c.size() != 2 || !(c[0] < c[1])) bad("clamp_range must be [lo, hi] with lo < hi");
        m.clamp_range = std::pair{c[0], c[1]};
      }
      m.ridge_alpha = get<double>(j, "ridge_alpha");
      m.degenerate = get<bool>(j, "degenerate");
      if (m.weights.size() != n_features) bad("linear weights do not match the feature count");
      return m;
    }
    case LearnerKind::kRf: {
      expect_type("forest");
      ForestModel m;
      m.n_features = get<std::size_t>(j, "n_features");
      m.class_values = class_values_from(j);
      m.feature_subsample = get<std::string>(j, "feature_subsample");
      m.seed = get<std::uint64_t>(j, "seed");
      for (const auto& t : get<json>(j, "trees")) {
        m.trees.push_back(tree_from_json(t, m.n_features, m.class_values.size()));
      }
      if (m.trees.empty()) bad("forest has no trees");
      if (m.n_features != n_features) bad("forest feature count does not match the featurizer");
      return m;
    }
    case LearnerKind::kXgb: {
      expect_type("boosted");
      BoostedModel m;
      m.n_features = get<std::size_t>(j, "n_features");
      m.class_values = class_values_from(j);
      m.learning_rate = get<double>(j, "learning_rate");
      m.base_score = get<double>(j, "base_score");
      m.n_rounds = get<int>(j, "n_rounds");
      m.max_depth = get<int>(j, "max_depth");
      m.l2_lambda = get<double>(j, "l2_lambda");
      m.min_child_weight = get<double>(j, "min_child_weight");
      m.seed = get<std::uint64_t>(j, "seed");
      m.train_log = get<std::vector<double>>(j, "train_log");
      for (const auto& per_class : get<json>(j, "stages")) {
        std::vector<DecisionTree> trees;
        for (const auto& t : per_class) trees.push_back(tree_from_json(t, m.n_features, 1));
        if (trees.size() != static_cast<std::size_t>(m.n_rounds)) {
          bad("every class must have exactly n_rounds stage trees");
        }
        m.stages.push_back(std::move(trees));
      }
      if (m.stages.size() != m.class_values.size()) bad("stage count does not match classes");
      if (m.n_features != n_features) bad("boosting feature count does not match the featurizer");
      return m;
    }
    case LearnerKind::kSvr: {
      expect_type("svr");
      SvrModel m;
      m.n_features = get<std::size_t>(j, "n_features");
      m.gamma = get<double>(j, "gamma");
      m.c = get<double>(j, "c");
      m.epsilon = get<double>(j, "epsilon");
      m.bias = get<double>(j, "bias");
      m.dual_coefs = get<std::vector<double>>(j, "dual_coefs");
      m.support_vectors = sparse_from_json(get<json>(j, "support_vectors"));
      const json& log = get<json>(j, "train_log");
      m.train_log.iterations = get<std::size_t>(log, "iterations");
      m.train_log.max_violation = get<double>(log, "max_violation");
      m.train_log.hit_iteration_cap = get<bool>(log, "hit_iteration_cap");
      if (m.support_vectors.n_rows() != m.dual_coefs.size() ||
          m.support_vectors.n_cols() != m.n_features || m.n_features != n_features) {
        bad("support vectors, coefficients and feature count disagree");
      }
      if (!(m.gamma > 0.0)) bad("svr gamma must be positive");
      return m;
    }
    case LearnerKind::kNn: {
      expect_type("mlp");
      MlpModel m;
      m.n_features = get<std::size_t>(j, "n_features");
      m.dropout_rate = get<double>(j, "dropout_rate");
      m.task = get<std::string>(j, "task") == "binary" ? MlpTask::kBinary : MlpTask::kRegression;
      m.train_log = get<std::vector<double>>(j, "train_log");
      const json& weights = get<json>(j, "weights");
      const json& biases = get<json>(j, "biases");
      if (weights.size() != 3 || biases.size() != 3) bad("network must have three layers");
      const std::array<Eigen::Index, 4> widths{static_cast<Eigen::Index>(m.n_features),
                                               kMlpHiddenWidth, kMlpHiddenWidth, 1};
      for (int l = 0; l < 3; ++l) {
        m.params.weights[l] = matrix_from_json(weights[l], widths[l], widths[l + 1]);
        const auto b = biases[l].get<std::vector<double>>();
        if (static_cast<Eigen::Index>(b.size()) != widths[l + 1]) bad("bias has the wrong length");
        m.params.biases[l] = Eigen::Map<const Eigen::VectorXd>(b.data(), widths[l + 1]);
      }
      if (m.n_features != n_features) bad("network input width does not match the featurizer");
      return m;
    }
    case LearnerKind::kMean: {
      expect_type("mean");
      return MeanModel{get<double>(j, "mean")};
    }
  }
  bad("unhandled learner kind");
}

json spec_to_json(const LearnerSpec& s) {
  json gamma = nullptr;
  if (s.svr.gamma) gamma = *s.svr.gamma;
  return {{"orr", {{"alpha", s.orr_alpha}}},
          {"rf", {{"n_trees", s.forest.n_trees}, {"seed", s.forest.seed}}},
          {"xgb",
           {{"n_rounds", s.boosting.n_rounds},
            {"learning_rate", s.boosting.learning_rate},
            {"max_depth", s.boosting.max_depth},
            {"lambda", s.boosting.l2_lambda},
            {"min_child_weight", s.boosting.min_child_weight},
            {"seed", s.boosting.seed}}},
          {"svr",
           {{"c", s.svr.c},
            {"epsilon", s.svr.epsilon},
            {"gamma", gamma},
            {"tol", s.svr.tol},
            {"max_iter", s.svr.max_iter},
            {"cache_mb", s.svr.cache_mb}}},
          {"nn",
           {{"dropout", s.nn_dropout},
            {"epochs", s.nn.epochs},
            {"batch_size", s.nn.batch_size},
            {"learning_rate", s.nn.learning_rate},
            {"seed", s.nn.seed}}}};
}

void spec_from_json(const json& j, LearnerSpec& s) {
  const json& orr = get<json>(j, "orr");
  s.orr_alpha = get<double>(orr, "alpha");
  const json& rf = get<json>(j, "rf");
  s.forest.n_trees = get<int>(rf, "n_trees");
  s.forest.seed = get<std::uint64_t>(rf, "seed");
  const json& xgb = get<json>(j, "xgb");
  s.boosting.n_rounds = get<int>(xgb, "n_rounds");
  s.boosting.learning_rate = get<double>(xgb, "learning_rate");
  s.boosting.max_depth = get<int>(xgb, "max_depth");
  s.boosting.l2_lambda = get<double>(xgb, "lambda");
  s.boosting.min_child_weight = get<double>(xgb, "min_child_weight");
  s.boosting.seed = get<std::uint64_t>(xgb, "seed");
  const json& svr = get<json>(j, "svr");
  s.svr.c = get<double>(svr, "c");
  s.svr.epsilon = get<double>(svr, "epsilon");
  const json& gamma = get<json>(svr, "gamma");
  if (!gamma.is_null()) s.svr.gamma = gamma.get<double>();
  s.svr.tol = get<double>(svr, "tol");
  s.svr.max_iter = get<std::size_t>(svr, "max_iter");
  s.svr.cache_mb = get<double>(svr, "cache_mb");
  const json& nn = get<json>(j, "nn");
  s.nn_dropout = get<double>(nn, "dropout");
  s.nn.epochs = get<int>(nn, "epochs");
  s.nn.batch_size = get<int>(nn, "batch_size");
  s.nn.learning_rate = get<double>(nn, "learning_rate");
  s.nn.seed = get<std::uint64_t>(nn, "seed");
}

json features_to_json(const FeatureState& f) {
  if (f.kind == FeatureKind::kEmbeddings) return {{"source", "embeddings"}, {"dim", f.embedding_dim}};
  return {{"source", "text"},
          {"mode", std::string(to_string(f.config.mode))},
          {"ngram_min", f.config.ngram_min},
          {"ngram_max", f.config.ngram_max},
          {"min_df", f.config.min_df},
          {"max_df", f.config.max_df},
          {"unitize", f.config.unitize},
          {"n_docs", f.vocab.n_docs},
          {"terms", f.vocab.terms},
          {"doc_freq", f.vocab.doc_freq}};
}

FeatureState features_from_json(const json& j) {
  FeatureState f;
  const auto source = get<std::string>(j, "source");
  if (source == "embeddings") {
    f.kind = FeatureKind::kEmbeddings;
    f.embedding_dim = get<std::size_t>(j, "dim");
    return f;
  }
  if (source != "text") bad("unknown feature source '" + source + "'");
  f.kind = FeatureKind::kText;
  f.config.mode = parse_feature_mode(get<std::string>(j, "mode"));
  f.config.ngram_min = get<int>(j, "ngram_min");
  f.config.ngram_max = get<int>(j, "ngram_max");
  f.config.min_df = get<double>(j, "min_df");
  f.config.max_df = get<double>(j, "max_df");
  f.config.unitize = get<bool>(j, "unitize");
  auto terms = get<std::vector<std::string>>(j, "terms");
  auto doc_freq = get<std::vector<std::size_t>>(j, "doc_freq");
  if (terms.size() != doc_freq.size()) bad("vocabulary terms and doc_freq differ in length");
  f.vocab = Vocabulary::from_terms(std::move(terms), std::move(doc_freq),
                                   get<std::size_t>(j, "n_docs"));
  return f;
}

std::size_t feature_count(const FeatureState& f) {
  return f.kind == FeatureKind::kEmbeddings ? f.embedding_dim : f.vocab.size();
}

}  // namespace

json model_to_json(const ModelFile& file) {
  return {{"format_version", file.format_version},
          {"learner", std::string(to_string(file.spec.kind))},
          {"task", std::string(to_string(file.spec.task))},
          {"hyperparameters", spec_to_json(file.spec)},
          {"featurizer", features_to_json(file.features)},
          {"model", model_payload(file.model)},
          {"seed", file.seed},
          {"provenance",
           {{"dataset_sha256", file.dataset_sha256},
            {"dataset_timestamp", file.dataset_timestamp}}}};
}

ModelFile model_from_json(const json& doc) {
  if (!doc.is_object()) bad("top level must be an object");
  const int version = get<int>(doc, "format_version");
  if (version != kModelFormatVersion) {
    bad("unsupported format_version " + std::to_string(version) + " (supported: " +
        std::to_string(kModelFormatVersion) + ")");
  }
  ModelFile file;
  file.format_version = version;
  try {
    file.spec.kind = parse_learner_kind(get<std::string>(doc, "learner"));
    file.spec.task = parse_task(get<std::string>(doc, "task"));
  } catch (const ConfigError& e) {
    bad(e.what());
  }
  spec_from_json(get<json>(doc, "hyperparameters"), file.spec);
  file.features = features_from_json(get<json>(doc, "featurizer"));
  file.model = payload_model(get<json>(doc, "model"), file.spec.kind, feature_count(file.features));
  file.seed = get<std::uint64_t>(doc, "seed");
  const json& prov = get<json>(doc, "provenance");
  file.dataset_sha256 = get<std::string>(prov, "dataset_sha256");
  file.dataset_timestamp = get<std::string>(prov, "dataset_timestamp");
  return file;
}

void save_model(const ModelFile& file, const std::filesystem::path& path) {
  write_file_atomic(path, model_to_json(file).dump() + "\n");
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read model file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError("model file " + path.string() + " is not valid JSON (truncated?): " +
                    e.what());
  }
  return model_from_json(doc);
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw DataError("SHA-256 computation failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) {
    out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return out.str();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

std::string file_timestamp_utc(const std::filesystem::path& path) {
  const auto ftime = std::filesystem::last_write_time(path);
  const auto sys = std::chrono::file_clock::to_sys(ftime);
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::time_point_cast<std::chrono::seconds>(sys));
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

}  // namespace urgency
