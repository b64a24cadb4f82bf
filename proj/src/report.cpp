#include "urgency/report.hpp"

#include <fmt/format.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "urgency/csv.hpp"
#include "urgency/error.hpp"

namespace urgency {

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += fmt::format(".tmp.{}", static_cast<long>(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw DataError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  return fmt::format("{}", value);
}

std::string predictions_csv(std::span<const LabeledPost> posts, std::span<const double> truth,
                            const Predictions& pred, std::span<const int> folds) {
  const bool has_score = !pred.score.empty();
  const bool has_fold = !folds.empty();
  std::vector<std::string> header{"post_id", "student_id", "truth", "prediction"};
  if (has_score) header.push_back("score");
  if (has_fold) header.push_back("fold");
  std::string out = csv::format_row(header);
  for (std::size_t i = 0; i < posts.size(); ++i) {
    std::vector<std::string> row{posts[i].post.post_id, posts[i].post.student_id,
                                 format_number(truth[i]), format_number(pred.value[i])};
    if (has_score) row.push_back(format_number(pred.score[i]));
    if (has_fold) row.push_back(std::to_string(folds[i] + 1));
    out += csv::format_row(row);
  }
  return out;
}

std::string metrics_csv(const MetricsReport& pooled, const MetricsReport* fold_mean) {
  std::string out = csv::format_row({"metric", "pooled", "fold_mean"});
  auto line = [&](const char* name, double a, double b) {
    out += csv::format_row({name, format_number(a), fold_mean ? format_number(b) : ""});
  };
  line("rmse", pooled.rmse, fold_mean ? fold_mean->rmse : 0.0);
  line("spearman_rho", pooled.spearman_rho, fold_mean ? fold_mean->spearman_rho : 0.0);
  out += csv::format_row({"n", std::to_string(pooled.n), ""});
  return out;
}

std::string binary_metrics_csv(const BinaryReport& pooled, const BinaryReport* fold_mean) {
  std::string out = csv::format_row({"metric", "pooled", "fold_mean"});
  auto line = [&](const char* name, double a, double b) {
    out += csv::format_row({name, format_number(a), fold_mean ? format_number(b) : ""});
  };
  line("auc_macro", pooled.auc_macro, fold_mean ? fold_mean->auc_macro : 0.0);
  line("f1_weighted", pooled.f1_weighted, fold_mean ? fold_mean->f1_weighted : 0.0);
  line("f1_class0", pooled.f1_class0, fold_mean ? fold_mean->f1_class0 : 0.0);
  line("f1_class1", pooled.f1_class1, fold_mean ? fold_mean->f1_class1 : 0.0);
  out += csv::format_row({"threshold", format_number(pooled.threshold), ""});
  return out;
}

std::string calibration_csv(const CalibrationCurve& curve) {
  std::string out = csv::format_row({"label", "mean_prediction", "stdev_prediction", "count"});
  for (const auto& b : curve) {
    out += csv::format_row({format_number(b.label), format_number(b.mean_pred),
                            format_number(b.stdev_pred), std::to_string(b.count)});
  }
  return out;
}

std::string sweep_csv(std::span<const BinaryReport> sweep) {
  std::string out =
      csv::format_row({"threshold", "auc_macro", "f1_weighted", "f1_class0", "f1_class1"});
  for (const auto& r : sweep) {
    out += csv::format_row({fmt::format("{:.2f}", r.threshold), format_number(r.auc_macro),
                            format_number(r.f1_weighted), format_number(r.f1_class0),
                            format_number(r.f1_class1)});
  }
  return out;
}

std::string stats_csv(const CorpusStats& stats) {
  std::string out = csv::format_row({"statistic", "value"});
  out += csv::format_row({"n_posts", std::to_string(stats.n_posts)});
  out += csv::format_row({"n_students", std::to_string(stats.n_students)});
  for (const auto& [label, count] : stats.label_histogram) {
    out += csv::format_row({"label_" + label.to_string(), std::to_string(count)});
  }
  out += csv::format_row({"word_count_mean", format_number(stats.word_count_mean)});
  out += csv::format_row({"word_count_stdev", format_number(stats.word_count_stdev)});
  out += csv::format_row({"word_count_min", std::to_string(stats.word_count_min)});
  out += csv::format_row({"word_count_max", std::to_string(stats.word_count_max)});
  return out;
}

std::string calibration_svg(const CalibrationCurve& curve, std::string_view title) {
  constexpr double kWidth = 560, kHeight = 420;
  constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 60;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  double x_lo = 1.0, x_hi = 7.0, y_lo = 0.0, y_hi = 8.0;
  for (const auto& b : curve) {
    x_lo = std::min(x_lo, std::floor(b.label));
    x_hi = std::max(x_hi, std::ceil(b.label));
    y_lo = std::min(y_lo, std::floor(b.mean_pred - b.stdev_pred));
    y_hi = std::max(y_hi, std::ceil(b.mean_pred + b.stdev_pred));
  }
  x_lo -= 0.5;
  x_hi += 0.5;
  auto px = [&](double x) { return kLeft + (x - x_lo) / (x_hi - x_lo) * plot_w; };
  auto py = [&](double y) { return kTop + (y_hi - y) / (y_hi - y_lo) * plot_h; };

  std::string s = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{3}</text>\n",
      kWidth, kHeight, kWidth / 2, title);
  // Axes.
  s += fmt::format(
      "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n"
      "<line x1=\"{0}\" y1=\"{3}\" x2=\"{0}\" y2=\"{1}\" stroke=\"black\"/>\n",
      kLeft, kTop + plot_h, kLeft + plot_w, kTop);
  for (double x = std::ceil(x_lo); x <= x_hi; x += 1.0) {
    s += fmt::format(
        "<line x1=\"{0:.2f}\" y1=\"{1}\" x2=\"{0:.2f}\" y2=\"{2}\" stroke=\"black\"/>"
        "<text x=\"{0:.2f}\" y=\"{3}\" text-anchor=\"middle\">{4}</text>\n",
        px(x), kTop + plot_h, kTop + plot_h + 5, kTop + plot_h + 20, x);
  }
  for (double y = y_lo; y <= y_hi; y += 1.0) {
    s += fmt::format(
        "<line x1=\"{0}\" y1=\"{1:.2f}\" x2=\"{2}\" y2=\"{1:.2f}\" stroke=\"#dddddd\"/>"
        "<text x=\"{3}\" y=\"{4:.2f}\" text-anchor=\"end\">{5}</text>\n",
        kLeft, py(y), kLeft + plot_w, kLeft - 8, py(y) + 4, y);
  }
  s += fmt::format(
      "<text x=\"{0}\" y=\"{1}\" text-anchor=\"middle\">True urgency label</text>\n"
      "<text x=\"18\" y=\"{2}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {2})\">"
      "Predicted urgency (mean &#177; stdev)</text>\n",
      kLeft + plot_w / 2, kHeight - 15, kTop + plot_h / 2);
  // Identity reference and the per-label points with error bars.
  s += fmt::format(
      "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#999999\" "
      "stroke-dasharray=\"4 4\"/>\n",
      px(std::max(x_lo, y_lo)), py(std::max(x_lo, y_lo)), px(std::min(x_hi, y_hi)),
      py(std::min(x_hi, y_hi)));
  for (const auto& b : curve) {
    const double x = px(b.label);
    s += fmt::format(
        "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"#1f77b4\"/>"
        "<line x1=\"{3:.2f}\" y1=\"{1:.2f}\" x2=\"{4:.2f}\" y2=\"{1:.2f}\" stroke=\"#1f77b4\"/>"
        "<line x1=\"{3:.2f}\" y1=\"{2:.2f}\" x2=\"{4:.2f}\" y2=\"{2:.2f}\" stroke=\"#1f77b4\"/>"
        "<circle cx=\"{0:.2f}\" cy=\"{5:.2f}\" r=\"4\" fill=\"#1f77b4\"><title>label {6}: "
        "mean {7:.3f}, stdev {8:.3f}, n={9}</title></circle>\n",
        x, py(b.mean_pred + b.stdev_pred), py(b.mean_pred - b.stdev_pred), x - 6, x + 6,
        py(b.mean_pred), b.label, b.mean_pred, b.stdev_pred, b.count);
  }
  s += "</svg>\n";
  return s;
}

}  // namespace urgency
