#ifndef URGENCY_REPORT_HPP_
#define URGENCY_REPORT_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "urgency/corpus.hpp"
#include "urgency/crossval.hpp"
#include "urgency/metrics.hpp"

namespace urgency {

// Writes to a sibling temp file, then renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Shortest decimal that reads back to the same double.
std::string format_number(double value);

// Header: post_id,student_id,truth,prediction[,score],fold. fold is omitted
// when folds is empty.
std::string predictions_csv(std::span<const LabeledPost> posts, std::span<const double> truth,
                            const Predictions& pred, std::span<const int> folds);

std::string metrics_csv(const MetricsReport& pooled, const MetricsReport* fold_mean);
std::string binary_metrics_csv(const BinaryReport& pooled, const BinaryReport* fold_mean);
std::string calibration_csv(const CalibrationCurve& curve);
std::string sweep_csv(std::span<const BinaryReport> sweep);
std::string stats_csv(const CorpusStats& stats);

// Mean +- stdev of predictions per true label, with labeled axes.
std::string calibration_svg(const CalibrationCurve& curve, std::string_view title);

}  // namespace urgency

#endif  // URGENCY_REPORT_HPP_
