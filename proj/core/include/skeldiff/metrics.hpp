#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "skeldiff/types.hpp"

// Frame-level evaluation. Anomalous is the positive class and a frame is
// predicted anomalous when its score is >= the threshold. Samples with equal
// scores always move together as one threshold group.

namespace skeldiff {

struct RocPoint {
  double threshold = 0.0;  // +inf for the (0,0) origin
  double fpr = 0.0;
  double tpr = 0.0;
};

struct PrPoint {
  double threshold = 0.0;  // +inf for the (recall 0, precision 1) origin
  double recall = 0.0;
  double precision = 1.0;
};

/// Origin at +inf, then one point per distinct score in descending order,
/// ending at (1,1). Throws std::invalid_argument on single-class input.
std::vector<RocPoint> roc_curve(std::span<const ScoredFrame> samples);

/// Trapezoidal area under roc_curve(); equals P(pos > neg) + P(tie)/2.
double auc_roc(std::span<const ScoredFrame> samples);

/// Throws std::invalid_argument when there are no positives.
std::vector<PrPoint> pr_curve(std::span<const ScoredFrame> samples);

/// Step-wise area: sum over thresholds of (recall gain) x precision.
double auc_pr(std::span<const ScoredFrame> samples);

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

/// Crossing of FPR and FNR, linearly interpolated between the two bracketing
/// operating points. `eer` is the interpolated common rate; `threshold` is the
/// score threshold of whichever bracketing operating point has the smaller
/// |FPR - FNR|, so counting at it reproduces the nearest realizable rates.
EerResult eer(std::span<const ScoredFrame> samples);

enum class Averaging { Concatenate, PerVideo };

/// All metrics at once. PerVideo averages each metric over the videos that
/// contain both classes; other videos are skipped.
MetricsReport evaluate(std::span<const ScoredFrame> samples,
                       Averaging averaging = Averaging::Concatenate);

struct WindowScore {
  std::string video_id;
  FrameIndex start_frame = 0;
  std::size_t frames = 0;
  double score = 0.0;  // anomaly polarity
};

enum class UncoveredPolicy { LeastAnomalous, Drop };

struct FrameScoreOptions {
  UncoveredPolicy uncovered = UncoveredPolicy::LeastAnomalous;
  /// Score for uncovered frames; defaults to the lowest window score (0 when
  /// there are no windows).
  std::optional<double> sentinel;
};

struct FrameScores {
  std::vector<ScoredFrame> frames;
  std::size_t uncovered = 0;
};

/// Scores every frame in `evaluated` with the maximum score of the windows
/// covering it. Output follows the order of `evaluated`.
FrameScores windows_to_frame_scores(std::span<const WindowScore> windows,
                                    std::span<const FrameLabel> evaluated,
                                    FrameScoreOptions options = {});

std::string metrics_report_to_json(const MetricsReport& report);
std::string roc_curve_to_csv(std::span<const RocPoint> curve);
std::string pr_curve_to_csv(std::span<const PrPoint> curve);

}  // namespace skeldiff
