#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "skeldiff/analysis.hpp"
#include "skeldiff/features.hpp"
#include "skeldiff/ingest.hpp"
#include "skeldiff/types.hpp"

namespace skeldiff {

struct Binning {
  enum class Kind { FixedCount, FixedWidth, Auto };
  Kind kind = Kind::Auto;
  double value = 0.0;  // bin count or bin width

  static Binning fixed_count(std::size_t n) { return {Kind::FixedCount, static_cast<double>(n)}; }
  static Binning fixed_width(double w) { return {Kind::FixedWidth, w}; }
  static Binning automatic() { return {Kind::Auto, 0.0}; }
};

/// "auto", "count:<n>" or "width:<w>".
Binning parse_binning(std::string_view text);
std::string to_string(const Binning& binning);

/// Bins are right-open except the last, which is closed.
struct Histogram {
  std::vector<double> bin_edges;
  std::vector<std::size_t> counts;
  Split split = Split::Train;
  std::string tag;
};

/// Auto uses the Freedman-Diaconis width with the bin count clamped to
/// [10, 200], falling back to 10 equal bins when the IQR is zero. A
/// zero-range series gets one unit-wide bin per requested bin around the value.
Histogram histogram(const DistanceSeries& series, Binning binning);

/// Linear interpolation between order statistics; `sorted` must be ascending.
double quantile(std::span<const double> sorted, double p);

/// Quartiles plus Tukey whiskers: the most extreme data values still inside
/// Q1 - 1.5 IQR and Q3 + 1.5 IQR.
BoxStats box_stats(const DistanceSeries& series);

/// Header `bin_left,bin_right,count,split`.
std::string histograms_to_csv(std::span<const Histogram> histograms);

struct DifficultyOptions {
  std::vector<FeatureType> features{FeatureType::Pose, FeatureType::AbsoluteTrajectory};
  Binning binning = Binning::automatic();
  bool center = true;
  SocialOptions social{};
};

struct FeatureDifficulty {
  FeatureType type = FeatureType::Pose;
  std::optional<SdomReport> sdom;
  std::map<Split, BoxStats> box;  // splits with at least one window
  std::vector<Histogram> histograms;
  std::vector<std::string> warnings;
};

struct DifficultyReport {
  WindowingConfig config;
  DifficultyOptions options;
  std::vector<FeatureDifficulty> features;
  /// Feature types with an S-DoM value, most discriminative first.
  std::vector<FeatureType> ranking;
  std::vector<std::string> warnings;
};

/// Distances for the report are taken to the training-normal mean.
DifficultyReport difficulty_report(const DatasetBundle& bundle, const DifficultyOptions& options);

std::string difficulty_report_to_json(const DifficultyReport& report);

/// Structural check of a report document against docs/report.schema.json.
/// Returns one message per violation; empty means valid.
std::vector<std::string> validate_report_json(std::string_view json_text);

std::string box_stats_to_json(const std::map<Split, BoxStats>& stats, std::string_view tag);

}  // namespace skeldiff
