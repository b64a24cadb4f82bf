#include "cli.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <iostream>
#include <numeric>
#include <optional>

#include "urgency/corpus.hpp"
#include "urgency/crossval.hpp"
#include "urgency/csv.hpp"
#include "urgency/error.hpp"
#include "urgency/featurize.hpp"
#include "urgency/learner.hpp"
#include "urgency/metrics.hpp"
#include "urgency/model_io.hpp"
#include "urgency/preprocess.hpp"
#include "urgency/report.hpp"
#include "urgency/run_config.hpp"

namespace urgency::cli {

namespace fs = std::filesystem;

namespace {

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out_dir;
  std::vector<std::string> column_map;
  std::optional<std::string> embeddings;
  std::string log_level = "info";
  bool print_stopwords = false;
};

// Flags that override the experiment part of the configuration.
struct ExperimentOptions {
  std::optional<std::string> train, format, test, test_format, test_embeddings;
  std::vector<std::string> test_column_map;
  std::optional<std::string> learner, task, mode, features;
  std::optional<int> k_folds, ngram_min, ngram_max;
  std::optional<double> min_df, max_df;
  bool unitize = false;
  std::optional<double> orr_alpha;
  std::optional<int> rf_trees;
  std::optional<int> xgb_rounds, xgb_depth;
  std::optional<double> xgb_eta, xgb_lambda;
  std::optional<double> svr_c, svr_epsilon, svr_gamma, svr_tol, cache_mb;
  std::optional<std::size_t> svr_max_iter;
  std::optional<double> nn_dropout, nn_lr;
  std::optional<int> nn_epochs, nn_batch;
  std::optional<std::string> save_model;
};

void add_experiment_options(CLI::App* cmd, ExperimentOptions& o, bool with_test) {
  cmd->add_option("--train", o.train, "Training corpus CSV");
  cmd->add_option("--format", o.format, "Training corpus format: upenn or stanford");
  if (with_test) {
    cmd->add_option("--test", o.test, "Test corpus CSV");
    cmd->add_option("--test-format", o.test_format, "Test corpus format: upenn or stanford");
    cmd->add_option("--test-column-map", o.test_column_map, "role=name for the test corpus");
    cmd->add_option("--test-embeddings", o.test_embeddings, "Embedding file for the test corpus");
  }
  cmd->add_option("--learner", o.learner, "lr, orr, rf, xgb, svr, nn or mean");
  cmd->add_option("--task", o.task, "multiclass or binary");
  cmd->add_option("--features", o.features, "text or embeddings");
  cmd->add_option("--mode", o.mode, "bow or tfidf");
  cmd->add_option("--k-folds", o.k_folds, "Number of student-level folds");
  cmd->add_option("--ngram-min", o.ngram_min);
  cmd->add_option("--ngram-max", o.ngram_max);
  cmd->add_option("--min-df", o.min_df, "Minimum document-frequency proportion");
  cmd->add_option("--max-df", o.max_df, "Maximum document-frequency proportion");
  cmd->add_flag("--unitize", o.unitize, "L2-normalize bag-of-words rows");
  cmd->add_option("--orr-alpha", o.orr_alpha);
  cmd->add_option("--rf-trees", o.rf_trees);
  cmd->add_option("--xgb-rounds", o.xgb_rounds);
  cmd->add_option("--xgb-eta", o.xgb_eta);
  cmd->add_option("--xgb-depth", o.xgb_depth);
  cmd->add_option("--xgb-lambda", o.xgb_lambda);
  cmd->add_option("--svr-c", o.svr_c);
  cmd->add_option("--svr-epsilon", o.svr_epsilon);
  cmd->add_option("--svr-gamma", o.svr_gamma, "RBF width; omit for auto");
  cmd->add_option("--svr-tol", o.svr_tol);
  cmd->add_option("--svr-max-iter", o.svr_max_iter, "SMO iteration cap (0: 200 * n)");
  cmd->add_option("--cache-mb", o.cache_mb, "Kernel-row cache size in MB");
  cmd->add_option("--nn-dropout", o.nn_dropout);
  cmd->add_option("--nn-epochs", o.nn_epochs);
  cmd->add_option("--nn-batch-size", o.nn_batch);
  cmd->add_option("--nn-lr", o.nn_lr);
}

template <class T, class U>
void apply(const std::optional<T>& value, U& target) {
  if (value) target = static_cast<U>(*value);
}

CorpusFormat format_of(const std::string& name) {
  const auto f = parse_corpus_format(name);
  if (!f) throw ConfigError("unknown corpus format '" + name + "' (expected upenn or stanford)");
  return *f;
}

RunConfig resolve_config(const GlobalOptions& g, const ExperimentOptions* e) {
  RunConfig cfg = g.config.empty() ? RunConfig{} : load_run_config(g.config);
  apply(g.seed, cfg.seed);
  apply(g.jobs, cfg.jobs);
  if (g.out_dir) cfg.out_dir = *g.out_dir;
  for (const auto& [role, name] : parse_column_map(g.column_map)) cfg.train.columns[role] = name;
  if (g.embeddings) {
    cfg.feature_kind = FeatureKind::kEmbeddings;
    cfg.embeddings = *g.embeddings;
  }
  if (!e) return cfg;
  if (e->train) cfg.train.path = *e->train;
  if (e->format) cfg.train.format = format_of(*e->format);
  if (e->test) {
    if (!cfg.test) cfg.test = DatasetConfig{{}, CorpusFormat::kStanford, {}};
    cfg.test->path = *e->test;
  }
  if (e->test_format) {
    if (!cfg.test) throw ConfigError("--test-format given without a test corpus");
    cfg.test->format = format_of(*e->test_format);
  }
  if (!e->test_column_map.empty()) {
    if (!cfg.test) throw ConfigError("--test-column-map given without a test corpus");
    for (const auto& [role, name] : parse_column_map(e->test_column_map)) {
      cfg.test->columns[role] = name;
    }
  }
  if (e->test_embeddings) cfg.test_embeddings = *e->test_embeddings;
  if (e->features) {
    if (*e->features == "text") {
      cfg.feature_kind = FeatureKind::kText;
    } else if (*e->features == "embeddings") {
      cfg.feature_kind = FeatureKind::kEmbeddings;
    } else {
      throw ConfigError("--features must be text or embeddings");
    }
  }
  if (e->learner) cfg.learner.kind = parse_learner_kind(*e->learner);
  if (e->task) cfg.learner.task = parse_task(*e->task);
  if (e->mode) cfg.featurizer.mode = parse_feature_mode(*e->mode);
  apply(e->k_folds, cfg.k_folds);
  apply(e->ngram_min, cfg.featurizer.ngram_min);
  apply(e->ngram_max, cfg.featurizer.ngram_max);
  apply(e->min_df, cfg.featurizer.min_df);
  apply(e->max_df, cfg.featurizer.max_df);
  if (e->unitize) cfg.featurizer.unitize = true;
  auto& l = cfg.learner;
  apply(e->orr_alpha, l.orr_alpha);
  apply(e->rf_trees, l.forest.n_trees);
  apply(e->xgb_rounds, l.boosting.n_rounds);
  apply(e->xgb_eta, l.boosting.learning_rate);
  apply(e->xgb_depth, l.boosting.max_depth);
  apply(e->xgb_lambda, l.boosting.l2_lambda);
  apply(e->svr_c, l.svr.c);
  apply(e->svr_epsilon, l.svr.epsilon);
  if (e->svr_gamma) l.svr.gamma = *e->svr_gamma;
  apply(e->svr_tol, l.svr.tol);
  apply(e->svr_max_iter, l.svr.max_iter);
  apply(e->cache_mb, l.svr.cache_mb);
  apply(e->nn_dropout, l.nn_dropout);
  apply(e->nn_epochs, l.nn.epochs);
  apply(e->nn_batch, l.nn.batch_size);
  apply(e->nn_lr, l.nn.learning_rate);
  return cfg;
}

std::vector<std::string> post_ids(std::span<const LabeledPost> posts) {
  std::vector<std::string> ids;
  ids.reserve(posts.size());
  for (const auto& p : posts) ids.push_back(p.post.post_id);
  return ids;
}

FeatureSource make_source(const RunConfig& cfg, const fs::path& embeddings,
                          std::span<const std::string> ids) {
  FeatureSource source;
  source.kind = cfg.feature_kind;
  source.text = cfg.featurizer;
  if (cfg.feature_kind == FeatureKind::kEmbeddings) {
    if (embeddings.empty()) throw ConfigError("embedding features need an embeddings file");
    source.embedded = align_embeddings(load_embeddings(embeddings), ids);
  }
  return source;
}

std::string config_echo(const RunConfig& cfg) {
  std::string out = "\n# resolved configuration\n";
  out += to_toml(cfg);
  return out;
}

std::string calibration_title(const RunConfig& cfg, std::string_view what) {
  return std::string(what) + ": " + std::string(to_string(cfg.learner.kind)) + ", " +
         (cfg.feature_kind == FeatureKind::kText ? std::string(to_string(cfg.featurizer.mode))
                                                 : std::string("embeddings"));
}

// Writes the report set shared by crossval and transfer.
void write_reports(const RunConfig& cfg, std::span<const LabeledPost> posts,
                   std::span<const double> truth, const Predictions& pred,
                   std::span<const int> folds, const MetricsReport* pooled,
                   const MetricsReport* fold_mean, const BinaryReport* pooled_binary,
                   const BinaryReport* fold_mean_binary, std::string_view kind) {
  const fs::path& dir = cfg.out_dir;
  const bool binary = cfg.learner.task == Task::kBinary;
  write_file_atomic(dir / "predictions.csv", predictions_csv(posts, truth, pred, folds));

  std::string summary = std::string(kind) + " summary\n";
  summary += "learner: " + std::string(to_string(cfg.learner.kind)) +
             ", task: " + std::string(to_string(cfg.learner.task)) +
             ", posts: " + std::to_string(posts.size()) + "\n";

  std::vector<double> labels(posts.size());
  for (std::size_t i = 0; i < posts.size(); ++i) labels[i] = posts[i].label.value();
  const auto& plotted = binary ? pred.score : pred.value;
  const CalibrationCurve curve = calibration_curve(plotted, labels);
  write_file_atomic(dir / "calibration.csv", calibration_csv(curve));
  write_file_atomic(dir / "calibration.svg", calibration_svg(curve, calibration_title(cfg, kind)));

  if (binary) {
    write_file_atomic(dir / "metrics.csv", binary_metrics_csv(*pooled_binary, fold_mean_binary));
    std::vector<int> truth_int(truth.begin(), truth.end());
    const auto grid = default_threshold_grid();
    const auto sweep = sweep_thresholds(pred.score, truth_int, grid);
    write_file_atomic(dir / "sweep.csv", sweep_csv(sweep));
    const auto& best = best_by_weighted_f1(sweep);
    summary += "auc_macro: " + format_number(pooled_binary->auc_macro) + "\n";
    summary += "f1_weighted@0.5: " + format_number(pooled_binary->f1_weighted) + "\n";
    summary += "f1_class0@0.5: " + format_number(pooled_binary->f1_class0) + "\n";
    summary += "f1_class1@0.5: " + format_number(pooled_binary->f1_class1) + "\n";
    summary += "best threshold by weighted F1: " + fmt::format("{:.2f}", best.threshold) +
               " (f1_weighted " + format_number(best.f1_weighted) + ")\n";
  } else {
    write_file_atomic(dir / "metrics.csv", metrics_csv(*pooled, fold_mean));
    summary += "rmse: " + format_number(pooled->rmse) + "\n";
    summary += "spearman_rho: " + format_number(pooled->spearman_rho) + "\n";
    if (fold_mean) {
      summary += "fold-mean rmse: " + format_number(fold_mean->rmse) + "\n";
      summary += "fold-mean spearman_rho: " + format_number(fold_mean->spearman_rho) + "\n";
    }
  }
  summary += "\ncalibration (label, mean, stdev, count)\n";
  for (const auto& b : curve) {
    summary += fmt::format("  {}  {:.4f}  {:.4f}  {}\n", format_number(b.label), b.mean_pred,
                           b.stdev_pred, b.count);
  }
  summary += config_echo(cfg);
  write_file_atomic(dir / "summary.txt", summary);
  std::cout << summary.substr(0, summary.find("\n# resolved configuration"));
}

ModelFile fit_full(const RunConfig& cfg, std::span<const LabeledPost> posts,
                   std::span<const TokenizedPost> docs, const FeatureSource& source) {
  std::vector<std::size_t> rows(posts.size());
  std::iota(rows.begin(), rows.end(), 0);
  SparseFeatureMatrix x;
  ModelFile file;
  file.features = fit_features(source, docs, rows, &x);
  file.spec = cfg.learner.with_seed(cfg.seed);
  std::vector<double> labels(posts.size());
  for (std::size_t i = 0; i < posts.size(); ++i) labels[i] = posts[i].label.value();
  file.model = fit_learner(file.spec, x, labels);
  file.seed = cfg.seed;
  file.dataset_sha256 = sha256_file(cfg.train.path);
  file.dataset_timestamp = file_timestamp_utc(cfg.train.path);
  return file;
}

int cmd_crossval(const RunConfig& cfg, const ExperimentOptions& e) {
  cfg.validate();
  const auto posts = load_corpus(cfg.train.path, cfg.train.format, cfg.train.columns);
  const auto docs = preprocess_corpus(posts);
  const auto ids = post_ids(posts);
  const FeatureSource source = make_source(cfg, cfg.embeddings, ids);
  const CvResult cv = cross_validate(posts, docs, source, cfg.learner,
                                     CvOptions{cfg.k_folds, cfg.seed, cfg.jobs});
  const bool binary = cfg.learner.task == Task::kBinary;
  write_reports(cfg, posts, cv.truth, cv.oof, cv.fold_of_row, binary ? nullptr : &cv.pooled,
                binary ? nullptr : &cv.fold_mean, binary ? &cv.pooled_binary : nullptr,
                binary ? &cv.fold_mean_binary : nullptr, "cross-validation");
  if (e.save_model) {
    save_model(fit_full(cfg, posts, docs, source), *e.save_model);
    spdlog::info("model written to {}", *e.save_model);
  }
  return 0;
}

int cmd_transfer(const RunConfig& cfg) {
  cfg.validate();
  if (!cfg.test || cfg.test->path.empty()) throw ConfigError("transfer needs a test corpus (--test)");
  if (cfg.feature_kind == FeatureKind::kEmbeddings && cfg.test_embeddings.empty()) {
    throw ConfigError("transfer with embeddings needs --test-embeddings");
  }
  const auto train = load_corpus(cfg.train.path, cfg.train.format, cfg.train.columns);
  const auto test = load_corpus(cfg.test->path, cfg.test->format, cfg.test->columns);
  const auto train_docs = preprocess_corpus(train);
  const auto test_docs = preprocess_corpus(test);
  const FeatureSource train_source = make_source(cfg, cfg.embeddings, post_ids(train));
  const FeatureSource test_source = make_source(cfg, cfg.test_embeddings, post_ids(test));

  const ModelFile file = fit_full(cfg, train, train_docs, train_source);
  save_model(file, cfg.out_dir / "model.json");

  std::vector<std::size_t> rows(test.size());
  std::iota(rows.begin(), rows.end(), 0);
  const auto x = apply_features(file.features, test_source, test_docs, rows);
  const Predictions pred = predict_learner(file.spec, file.model, x);

  std::vector<double> truth(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) truth[i] = test[i].label.value();
  if (cfg.learner.task == Task::kBinary) {
    for (auto& t : truth) t = binarize(t);
    const std::vector<int> truth_int(truth.begin(), truth.end());
    const BinaryReport report = binary_report(pred.score, truth_int, 0.5);
    write_reports(cfg, test, truth, pred, {}, nullptr, nullptr, &report, nullptr, "transfer");
  } else {
    MetricsReport report{rmse(pred.value, truth), spearman_rho(pred.value, truth), test.size()};
    write_reports(cfg, test, truth, pred, {}, &report, nullptr, nullptr, nullptr, "transfer");
  }
  return 0;
}

struct PredictOptions {
  std::string model;
  std::string input;
  std::string format = "upenn";
  std::optional<std::string> output;
};

int cmd_predict(const GlobalOptions& g, const PredictOptions& o) {
  const RunConfig cfg = resolve_config(g, nullptr);
  const ModelFile file = load_model(o.model);
  const auto posts = load_unlabeled(o.input, format_of(o.format), cfg.train.columns);

  std::vector<TokenizedPost> docs;
  docs.reserve(posts.size());
  for (const auto& p : posts) docs.push_back(preprocess_post(p));
  FeatureSource source;
  source.kind = file.features.kind;
  if (source.kind == FeatureKind::kEmbeddings) {
    if (cfg.embeddings.empty()) throw ConfigError("this model needs --embeddings for the input");
    std::vector<std::string> ids;
    for (const auto& p : posts) ids.push_back(p.post_id);
    source.embedded = align_embeddings(load_embeddings(cfg.embeddings), ids);
  }
  std::vector<std::size_t> rows(posts.size());
  std::iota(rows.begin(), rows.end(), 0);
  Predictions pred;
  if (!posts.empty()) {
    const auto x = apply_features(file.features, source, docs, rows);
    pred = predict_learner(file.spec, file.model, x);
  }
  const bool binary = file.spec.task == Task::kBinary;
  const auto& key = binary ? pred.score : pred.value;
  std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) { return key[a] > key[b]; });

  std::vector<std::string> header{"post_id", "prediction"};
  if (binary) header.push_back("probability");
  std::string out = csv::format_row(header);
  for (auto r : rows) {
    std::vector<std::string> row{posts[r].post_id, format_number(pred.value[r])};
    if (binary) row.push_back(format_number(pred.score[r]));
    out += csv::format_row(row);
  }
  const fs::path target = o.output ? fs::path(*o.output) : cfg.out_dir / "scored.csv";
  write_file_atomic(target, out);
  std::cout << "scored " << posts.size() << " posts -> " << target.string() << "\n";
  return 0;
}

int cmd_sweep(const RunConfig& cfg, const std::string& predictions) {
  const fs::path path = predictions.empty() ? cfg.out_dir / "predictions.csv" : fs::path(predictions);
  const csv::Table table = csv::read_file(path);
  const auto truth_col = table.column("truth");
  const auto score_col = table.column("score");
  if (!truth_col || !score_col) {
    throw ConfigError(path.string() + " needs 'truth' and 'score' columns (binary predictions)");
  }
  std::vector<double> scores;
  std::vector<int> truth;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    try {
      scores.push_back(std::stod(table.rows[r][*score_col]));
      const double t = std::stod(table.rows[r][*truth_col]);
      if (t != 0.0 && t != 1.0) throw std::invalid_argument("truth");
      truth.push_back(static_cast<int>(t));
    } catch (const std::logic_error&) {
      throw DataError(path.string() + ": non-numeric score or non-binary truth on line " +
                      std::to_string(table.row_lines[r]));
    }
  }
  const auto grid = default_threshold_grid();
  const auto sweep = sweep_thresholds(scores, truth, grid);
  write_file_atomic(cfg.out_dir / "sweep.csv", sweep_csv(sweep));
  const auto& best = best_by_weighted_f1(sweep);
  std::cout << "threshold  f1_weighted  f1_class0  f1_class1\n";
  for (const auto& r : sweep) {
    std::cout << fmt::format("{:9.2f}  {:11.4f}  {:9.4f}  {:9.4f}\n", r.threshold, r.f1_weighted,
                             r.f1_class0, r.f1_class1);
  }
  std::cout << fmt::format("auc_macro {:.4f}; best threshold {:.2f} (f1_weighted {:.4f})\n",
                           best.auc_macro, best.threshold, best.f1_weighted);
  return 0;
}

struct KappaOptions {
  std::string ratings;
  std::optional<std::string> col_a, col_b;
  std::vector<double> categories;
};

int cmd_kappa(const KappaOptions& o) {
  const csv::Table table = csv::read_file(o.ratings);
  if (table.header.size() < 2) throw DataError(o.ratings + ": need two rating columns");
  auto column = [&](const std::optional<std::string>& name, std::size_t fallback) {
    if (!name) return fallback;
    const auto c = table.column(*name);
    if (!c) throw ConfigError(o.ratings + ": no column '" + *name + "'");
    return *c;
  };
  const std::size_t a = column(o.col_a, 0);
  const std::size_t b = column(o.col_b, 1);
  std::vector<double> ra, rb;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto la = UrgencyLabel::parse(table.rows[r][a]);
    const auto lb = UrgencyLabel::parse(table.rows[r][b]);
    if (!la || !lb) {
      throw DataError(o.ratings + ": unparseable rating on line " +
                      std::to_string(table.row_lines[r]));
    }
    ra.push_back(la->value());
    rb.push_back(lb->value());
  }
  std::vector<double> categories = o.categories;
  if (categories.empty()) {
    for (int h = UrgencyLabel::kMinHalfSteps; h <= UrgencyLabel::kMaxHalfSteps; ++h) {
      categories.push_back(h / 2.0);
    }
  }
  const KappaResult k = weighted_kappa_linear(ra, rb, categories);
  std::cout << fmt::format("kappa {:.6f}\nweighting {}\nn {}\n", k.kappa, k.weighting, k.n_items);
  return 0;
}

struct CorpusOptions {
  std::string input;
  std::optional<std::string> format;
};

std::vector<LabeledPost> load_for(const RunConfig& cfg, const CorpusOptions& o) {
  const fs::path path = o.input.empty() ? cfg.train.path : fs::path(o.input);
  if (path.empty()) throw ConfigError("no input corpus given");
  const CorpusFormat format = o.format ? format_of(*o.format) : cfg.train.format;
  return load_corpus(path, format, cfg.train.columns);
}

int cmd_ingest(const RunConfig& cfg, const CorpusOptions& o) {
  const auto posts = load_for(cfg, o);
  std::vector<RawPost> raw;
  raw.reserve(posts.size());
  for (const auto& p : posts) raw.push_back(p.post);
  const FilterResult filtered = filter_posts(raw);
  std::map<std::string, UrgencyLabel> label_of;
  for (const auto& p : posts) label_of.emplace(p.post.post_id, p.label);
  std::vector<LabeledPost> kept;
  for (const auto& p : filtered.kept) kept.push_back({p, label_of.at(p.post_id)});
  std::string dropped = csv::format_row({"post_id", "reason"});
  for (const auto& [p, reason] : filtered.dropped) {
    dropped += csv::format_row({p.post_id, std::string(to_string(reason))});
  }
  write_file_atomic(cfg.out_dir / "ingested.csv", corpus_to_csv(kept));
  write_file_atomic(cfg.out_dir / "dropped.csv", dropped);
  std::cout << "loaded " << posts.size() << ", kept " << kept.size() << ", dropped "
            << filtered.dropped.size() << "\n";
  return 0;
}

int cmd_stats(const RunConfig& cfg, const CorpusOptions& o) {
  const auto posts = load_for(cfg, o);
  const auto docs = preprocess_corpus(posts);
  std::vector<std::size_t> counts;
  for (const auto& d : docs) counts.push_back(d.tokens.size());
  const CorpusStats stats = compute_stats(posts, counts);
  write_file_atomic(cfg.out_dir / "stats.csv", stats_csv(stats));
  std::cout << "posts " << stats.n_posts << "\nstudents " << stats.n_students << "\nlabels";
  for (const auto& [label, count] : stats.label_histogram) {
    std::cout << " " << label.to_string() << ":" << count;
  }
  std::cout << fmt::format("\nwords mean {:.2f} stdev {:.2f} min {} max {}\n",
                           stats.word_count_mean, stats.word_count_stdev, stats.word_count_min,
                           stats.word_count_max);
  return 0;
}

int cmd_preprocess(const RunConfig& cfg, const CorpusOptions& o) {
  const auto posts = load_for(cfg, o);
  std::string out = csv::format_row({"post_id", "tokens"});
  for (const auto& d : preprocess_corpus(posts)) {
    std::string joined;
    for (const auto& t : d.tokens) joined += (joined.empty() ? "" : " ") + t;
    out += csv::format_row({d.post_id, joined});
  }
  write_file_atomic(cfg.out_dir / "tokens.csv", out);
  std::cout << "tokenized " << posts.size() << " posts -> "
            << (cfg.out_dir / "tokens.csv").string() << "\n";
  return 0;
}

int cmd_featurize(const RunConfig& cfg, const CorpusOptions& o) {
  cfg.featurizer.validate();
  const auto posts = load_for(cfg, o);
  const auto docs = preprocess_corpus(posts);
  const Vocabulary vocab = build_vocabulary(docs, cfg.featurizer);
  const SparseFeatureMatrix x = vectorize(docs, vocab, cfg.featurizer);
  write_file_atomic(cfg.out_dir / "vocabulary.csv", vocabulary_to_csv(vocab));
  std::string out = csv::format_row({"post_id", "term", "weight"});
  for (std::size_t r = 0; r < x.n_rows(); ++r) {
    const auto cols = x.row_cols(r);
    const auto vals = x.row_values(r);
    for (std::size_t i = 0; i < cols.size(); ++i) {
      out += csv::format_row({docs[r].post_id, vocab.terms[cols[i]], format_number(vals[i])});
    }
  }
  write_file_atomic(cfg.out_dir / "features.csv", out);
  std::cout << "vocabulary size " << vocab.size() << " (" << to_string(cfg.featurizer.mode)
            << ", n-grams " << cfg.featurizer.ngram_min << ".." << cfg.featurizer.ngram_max
            << ", min_df " << cfg.featurizer.min_df << ", max_df " << cfg.featurizer.max_df
            << ")\n";
  return 0;
}

void configure_logging(const std::string& level) {
  static const auto logger = [] {
    auto l = spdlog::stderr_color_mt("urgency");
    spdlog::set_default_logger(l);
    return l;
  }();
  const auto parsed = spdlog::level::from_str(level);
  if (parsed == spdlog::level::off && level != "off") {
    throw ConfigError("unknown log level '" + level + "'");
  }
  logger->set_level(parsed);
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Forum-post urgency prediction: corpus tools, cross-validation, transfer and scoring"};
  app.name("urgency");
  app.fallthrough();
  app.require_subcommand(0, 1);

  GlobalOptions g;
  app.add_option("--config", g.config, "TOML run configuration");
  app.add_option("--seed", g.seed, "Master random seed (default 42)");
  app.add_option("--jobs", g.jobs, "Parallel folds");
  app.add_option("--out-dir", g.out_dir, "Directory for reports (default out)");
  app.add_option("--column-map", g.column_map, "role=name column override (repeatable)");
  app.add_option("--embeddings", g.embeddings, "Embedding file; selects embedding features");
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, err or off");
  app.add_flag("--print-stopwords", g.print_stopwords, "Print the embedded stopword list");

  CorpusOptions corpus_opts;
  auto add_corpus = [&](const char* name, const char* help) {
    auto* cmd = app.add_subcommand(name, help);
    cmd->add_option("input", corpus_opts.input, "Corpus CSV (default: configured training set)");
    cmd->add_option("--format", corpus_opts.format, "upenn or stanford");
    return cmd;
  };
  auto* ingest = add_corpus("ingest", "Load and filter a corpus; write kept and dropped posts");
  auto* stats = add_corpus("stats", "Label histogram and token-count statistics");
  auto* preprocess = add_corpus("preprocess", "Write the token list of every post");
  auto* featurize = add_corpus("featurize", "Build the vocabulary and feature matrix");
  ExperimentOptions feat_opts;
  featurize->add_option("--mode", feat_opts.mode, "bow or tfidf");
  featurize->add_option("--ngram-min", feat_opts.ngram_min);
  featurize->add_option("--ngram-max", feat_opts.ngram_max);
  featurize->add_option("--min-df", feat_opts.min_df);
  featurize->add_option("--max-df", feat_opts.max_df);
  featurize->add_flag("--unitize", feat_opts.unitize);

  ExperimentOptions cv_opts;
  auto* crossval = app.add_subcommand("crossval", "Student-level k-fold cross-validation");
  add_experiment_options(crossval, cv_opts, false);
  crossval->add_option("--save-model", cv_opts.save_model, "Also fit on all rows and save");

  ExperimentOptions tr_opts;
  auto* transfer = app.add_subcommand("transfer", "Fit on the training corpus, score a test corpus");
  add_experiment_options(transfer, tr_opts, true);

  PredictOptions pred_opts;
  auto* predict = app.add_subcommand("predict", "Score posts with a saved model, most urgent first");
  predict->add_option("--model", pred_opts.model, "Model JSON")->required();
  predict->add_option("input", pred_opts.input, "CSV with a text column")->required();
  predict->add_option("--format", pred_opts.format, "upenn or stanford");
  predict->add_option("--output", pred_opts.output, "Output CSV (default <out-dir>/scored.csv)");

  std::string sweep_input;
  auto* sweep = app.add_subcommand("sweep", "Decision-threshold sweep over binary scores");
  sweep->add_option("predictions", sweep_input, "Binary predictions CSV (truth, score)");

  KappaOptions kappa_opts;
  auto* kappa = app.add_subcommand("kappa", "Linearly weighted Cohen's kappa of two raters");
  kappa->add_option("ratings", kappa_opts.ratings, "CSV with two rating columns")->required();
  kappa->add_option("--col-a", kappa_opts.col_a, "First rater column (default: first)");
  kappa->add_option("--col-b", kappa_opts.col_b, "Second rater column (default: second)");
  kappa->add_option("--categories", kappa_opts.categories, "Ordered categories (default 1..7 by 0.5)")
      ->delimiter(',');

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::kConfig);
  }

  try {
    configure_logging(g.log_level);
    if (g.print_stopwords) {
      std::cout << "# stopword list " << kStopwordListVersion << " (" << stopwords().size()
                << " words)\n";
      for (auto w : stopwords()) std::cout << w << "\n";
      return 0;
    }
    if (app.get_subcommands().empty()) {
      std::cerr << app.help();
      return static_cast<int>(ErrorKind::kConfig);
    }
    if (*ingest) return cmd_ingest(resolve_config(g, nullptr), corpus_opts);
    if (*stats) return cmd_stats(resolve_config(g, nullptr), corpus_opts);
    if (*preprocess) return cmd_preprocess(resolve_config(g, nullptr), corpus_opts);
    if (*featurize) return cmd_featurize(resolve_config(g, &feat_opts), corpus_opts);
    if (*crossval) return cmd_crossval(resolve_config(g, &cv_opts), cv_opts);
    if (*transfer) return cmd_transfer(resolve_config(g, &tr_opts));
    if (*predict) return cmd_predict(g, pred_opts);
    if (*sweep) return cmd_sweep(resolve_config(g, nullptr), sweep_input);
    if (*kappa) return cmd_kappa(kappa_opts);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return static_cast<int>(ErrorKind::kData);
  } catch (const std::exception& e) {
    spdlog::error("unexpected failure: {}", e.what());
    return 1;
  }
  return 0;
}

}  // namespace urgency::cli
