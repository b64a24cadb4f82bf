#include "urgency/run_config.hpp"

#include <toml.hpp>

#include <fstream>
#include <set>
#include <sstream>

#include "urgency/error.hpp"

namespace urgency {

namespace {

// Reads typed keys from one table and rejects keys nobody asked for.
class Section {
 public:
  Section(const toml::table* table, std::string name) : table_(table), name_(std::move(name)) {}

  bool present() const { return table_ != nullptr; }

  template <class T>
  void read(std::string_view key, T& out) {
    seen_.insert(std::string(key));
    if (!table_) return;
    const toml::node* node = table_->get(key);
    if (!node) return;
    if constexpr (std::is_same_v<T, std::string>) {
      if (auto v = node->value<std::string>()) {
        out = *v;
        return;
      }
    } else if constexpr (std::is_same_v<T, bool>) {
      if (auto v = node->value<bool>()) {
        out = *v;
        return;
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (auto v = node->value<double>()) {
        out = *v;
        return;
      }
    } else {
      if (auto v = node->value<std::int64_t>()) {
        if (*v < 0) throw ConfigError(where(key) + " must be non-negative");
        out = static_cast<T>(*v);
        return;
      }
    }
    throw ConfigError(where(key) + " has the wrong type");
  }

  Section sub(std::string_view key) {
    seen_.insert(std::string(key));
    const toml::table* child = nullptr;
    if (table_) {
      if (const toml::node* node = table_->get(key)) {
        child = node->as_table();
        if (!child) throw ConfigError(where(key) + " must be a table");
      }
    }
    return Section(child, name_.empty() ? std::string(key) : name_ + "." + std::string(key));
  }

  ColumnMap string_map(std::string_view key) {
    Section s = sub(key);
    ColumnMap out;
    if (!s.table_) return out;
    for (const auto& [k, v] : *s.table_) {
      const auto value = v.value<std::string>();
      if (!value) throw ConfigError(s.where(k.str()) + " must be a string");
      out[std::string(k.str())] = *value;
      s.seen_.insert(std::string(k.str()));
    }
    return out;
  }

  void finish() const {
    if (!table_) return;
    for (const auto& [k, v] : *table_) {
      if (!seen_.count(std::string(k.str()))) {
        throw ConfigError("unknown config key '" + where(k.str()) + "'");
      }
    }
  }

 private:
  std::string where(std::string_view key) const {
    return name_.empty() ? std::string(key) : name_ + "." + std::string(key);
  }

  const toml::table* table_;
  std::string name_;
  std::set<std::string> seen_;
};

CorpusFormat format_of(const std::string& name) {
  const auto f = parse_corpus_format(name);
  if (!f) throw ConfigError("unknown dataset format '" + name + "' (expected upenn or stanford)");
  return *f;
}

toml::table columns_table(const ColumnMap& map) {
  toml::table t;
  for (const auto& [role, name] : map) t.insert(role, name);
  return t;
}

}  // namespace

void RunConfig::validate(bool needs_train) const {
  if (needs_train && train.path.empty()) throw ConfigError("no training dataset path configured");
  if (k_folds < 2) throw ConfigError("k_folds must be >= 2");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (feature_kind == FeatureKind::kText) {
    if (!embeddings.empty() || !test_embeddings.empty()) {
      throw ConfigError("exactly one feature source: embeddings given while features.source = text");
    }
    featurizer.validate();
  } else if (needs_train && embeddings.empty()) {
    throw ConfigError("features.source = embeddings needs an embeddings file");
  }
  learner.validate();
}

RunConfig parse_run_config(std::string_view toml_text) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config parse error at line " << e.source().begin.line << ": " << e.description();
    throw ConfigError(msg.str());
  }
  RunConfig cfg;
  Section top(&root, "");
  top.read("seed", cfg.seed);
  top.read("k_folds", cfg.k_folds);
  top.read("jobs", cfg.jobs);
  std::string out_dir = cfg.out_dir.string();
  top.read("out_dir", out_dir);
  cfg.out_dir = out_dir;

  {
    Section data = top.sub("data");
    std::string train, format = "upenn", test, test_format = "stanford";
    data.read("train", train);
    data.read("format", format);
    data.read("test", test);
    data.read("test_format", test_format);
    cfg.train.path = train;
    cfg.train.format = format_of(format);
    cfg.train.columns = data.string_map("columns");
    const ColumnMap test_columns = data.string_map("test_columns");
    if (!test.empty()) cfg.test = DatasetConfig{test, format_of(test_format), test_columns};
    data.finish();
  }
  {
    Section feat = top.sub("features");
    std::string source = "text", mode(to_string(cfg.featurizer.mode)), emb, test_emb;
    feat.read("source", source);
    feat.read("mode", mode);
    feat.read("ngram_min", cfg.featurizer.ngram_min);
    feat.read("ngram_max", cfg.featurizer.ngram_max);
    feat.read("min_df", cfg.featurizer.min_df);
    feat.read("max_df", cfg.featurizer.max_df);
    feat.read("unitize", cfg.featurizer.unitize);
    feat.read("embeddings", emb);
    feat.read("test_embeddings", test_emb);
    if (source == "text") {
      cfg.feature_kind = FeatureKind::kText;
    } else if (source == "embeddings") {
      cfg.feature_kind = FeatureKind::kEmbeddings;
    } else {
      throw ConfigError("features.source must be text or embeddings");
    }
    cfg.featurizer.mode = parse_feature_mode(mode);
    cfg.embeddings = emb;
    cfg.test_embeddings = test_emb;
    feat.finish();
  }
  {
    Section learner = top.sub("learner");
    std::string kind(to_string(cfg.learner.kind)), task(to_string(cfg.learner.task));
    learner.read("kind", kind);
    learner.read("task", task);
    cfg.learner.kind = parse_learner_kind(kind);
    cfg.learner.task = parse_task(task);

    Section orr = learner.sub("orr");
    orr.read("alpha", cfg.learner.orr_alpha);
    orr.finish();

    Section rf = learner.sub("rf");
    rf.read("n_trees", cfg.learner.forest.n_trees);
    rf.finish();

    Section xgb = learner.sub("xgb");
    xgb.read("n_rounds", cfg.learner.boosting.n_rounds);
    xgb.read("learning_rate", cfg.learner.boosting.learning_rate);
    xgb.read("max_depth", cfg.learner.boosting.max_depth);
    xgb.read("lambda", cfg.learner.boosting.l2_lambda);
    xgb.read("min_child_weight", cfg.learner.boosting.min_child_weight);
    xgb.finish();

    Section svr = learner.sub("svr");
    svr.read("c", cfg.learner.svr.c);
    svr.read("epsilon", cfg.learner.svr.epsilon);
    double gamma = 0.0;
    svr.read("gamma", gamma);
    if (gamma != 0.0) cfg.learner.svr.gamma = gamma;
    svr.read("tol", cfg.learner.svr.tol);
    svr.read("max_iter", cfg.learner.svr.max_iter);
    svr.read("cache_mb", cfg.learner.svr.cache_mb);
    svr.finish();

    Section nn = learner.sub("nn");
    nn.read("dropout", cfg.learner.nn_dropout);
    nn.read("epochs", cfg.learner.nn.epochs);
    nn.read("batch_size", cfg.learner.nn.batch_size);
    nn.read("learning_rate", cfg.learner.nn.learning_rate);
    nn.finish();

    learner.finish();
  }
  top.finish();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

std::string to_toml(const RunConfig& c) {
  toml::table data{{"train", c.train.path.string()},
                   {"format", std::string(to_string(c.train.format))},
                   {"columns", columns_table(c.train.columns)}};
  if (c.test) {
    data.insert("test", c.test->path.string());
    data.insert("test_format", std::string(to_string(c.test->format)));
    data.insert("test_columns", columns_table(c.test->columns));
  }
  const auto& f = c.featurizer;
  toml::table features{
      {"source", c.feature_kind == FeatureKind::kText ? "text" : "embeddings"},
      {"mode", std::string(to_string(f.mode))},
      {"ngram_min", f.ngram_min},
      {"ngram_max", f.ngram_max},
      {"min_df", f.min_df},
      {"max_df", f.max_df},
      {"unitize", f.unitize},
      {"embeddings", c.embeddings.string()},
      {"test_embeddings", c.test_embeddings.string()}};
  const auto& l = c.learner;
  toml::table learner{
      {"kind", std::string(to_string(l.kind))},
      {"task", std::string(to_string(l.task))},
      {"orr", toml::table{{"alpha", l.orr_alpha}}},
      {"rf", toml::table{{"n_trees", l.forest.n_trees}}},
      {"xgb", toml::table{{"n_rounds", l.boosting.n_rounds},
                          {"learning_rate", l.boosting.learning_rate},
                          {"max_depth", l.boosting.max_depth},
                          {"lambda", l.boosting.l2_lambda},
                          {"min_child_weight", l.boosting.min_child_weight}}},
      {"svr", toml::table{{"c", l.svr.c},
                          {"epsilon", l.svr.epsilon},
                          {"gamma", l.svr.gamma ? *l.svr.gamma : 0.0},
                          {"tol", l.svr.tol},
                          {"max_iter", static_cast<std::int64_t>(l.svr.max_iter)},
                          {"cache_mb", l.svr.cache_mb}}},
      {"nn", toml::table{{"dropout", l.nn_dropout},
                         {"epochs", l.nn.epochs},
                         {"batch_size", l.nn.batch_size},
                         {"learning_rate", l.nn.learning_rate}}}};
  toml::table root{{"seed", static_cast<std::int64_t>(c.seed)},
                   {"k_folds", c.k_folds},
                   {"jobs", c.jobs},
                   {"out_dir", c.out_dir.string()},
                   {"data", std::move(data)},
                   {"features", std::move(features)},
                   {"learner", std::move(learner)}};
  std::ostringstream out;
  out << root << '\n';
  return out.str();
}

}  // namespace urgency
