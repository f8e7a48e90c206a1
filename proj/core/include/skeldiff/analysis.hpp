#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "skeldiff/types.hpp"

namespace skeldiff {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double value) noexcept;
  double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

/// Per-sample distances for one split. `tag` names the feature ("pose",
/// "traj", "social") or "latent".
struct DistanceSeries {
  std::vector<double> values;
  Split split = Split::Train;
  std::string tag;
};

/// Element-wise mean over windows of identical shape. Throws
/// std::invalid_argument on empty input or mixed shapes.
MeanTensor mean_tensor(std::span<const FeatureWindow> windows);

/// (1/T) * Frobenius norm of the difference of two means.
double delta(const MeanTensor& a, const MeanTensor& b);

/// delta_a - delta_n. Both inputs must be finite and non-negative.
double sdom(double delta_a, double delta_n);

SdomReport sdom_report(std::span<const FeatureWindow> train_normal,
                       std::span<const FeatureWindow> val_normal,
                       std::span<const FeatureWindow> val_anomalous, FeatureType type);

/// Splits `windows` by their split tag and builds the report.
SdomReport sdom_report(std::span<const FeatureWindow> windows, FeatureType type);

/// Unscaled Euclidean distance of each window to `mu`. Unlike delta() there is
/// no 1/T factor. The series takes its split from the first window.
DistanceSeries distances_to_mean(std::span<const FeatureWindow> windows, const MeanTensor& mu,
                                 std::string tag = {});

/// Distances of each embedding to the prior mean, grouped by split. Every split
/// key is present, possibly with an empty series.
std::map<Split, DistanceSeries> latent_distances(std::span<const EmbeddingRecord> records,
                                                 const EmbeddingPrior& prior);

// Serialization
std::string sdom_report_to_json(const SdomReport& report);
/// CSV with header `index,split,distance`.
std::string distance_series_to_csv(std::span<const DistanceSeries> series);

}  // namespace skeldiff
