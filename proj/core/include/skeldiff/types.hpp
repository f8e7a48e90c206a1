#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace skeldiff {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Malformed text input. `line()` is 1-based, 0 when not tied to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A dataset violates a contract that makes downstream analysis meaningless
/// (e.g. anomalous frames inside the training split).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Enumerations
// ---------------------------------------------------------------------------

enum class Label : std::uint8_t { Normal, Anomalous };
enum class Split : std::uint8_t { Train, ValidationNormal, ValidationAnomalous };
enum class FeatureType : std::uint8_t { Pose, AbsoluteTrajectory, SocialTrajectory };

/// Which side of the unsupervised protocol a whole video belongs to.
enum class VideoSplit : std::uint8_t { Train, Validation };

std::string_view to_string(Label label);
std::string_view to_string(Split split);
std::string_view to_string(FeatureType type);
std::string_view to_string(VideoSplit split);

Label parse_label(std::string_view text);
Split parse_split(std::string_view text);
FeatureType parse_feature_type(std::string_view text);
VideoSplit parse_video_split(std::string_view text);

/// Short CLI/file spelling: pose | traj | social.
std::string_view short_name(FeatureType type);

// ---------------------------------------------------------------------------
// Skeleton input
// ---------------------------------------------------------------------------

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

class Keypoint {
 public:
  Keypoint() = default;
  /// Throws std::invalid_argument on non-finite x/y or confidence outside [0,1].
  Keypoint(double x, double y, double confidence);

  double x() const noexcept { return x_; }
  double y() const noexcept { return y_; }
  double confidence() const noexcept { return confidence_; }
  Point2 position() const noexcept { return {x_, y_}; }

  friend bool operator==(const Keypoint&, const Keypoint&) = default;

 private:
  double x_ = 0.0;
  double y_ = 0.0;
  double confidence_ = 0.0;
};

using TrackId = std::int64_t;
using FrameIndex = std::int64_t;

class PoseDetection {
 public:
  PoseDetection() = default;
  /// Throws std::invalid_argument if frame_index < 0 or keypoints is empty.
  PoseDetection(std::string video_id, FrameIndex frame_index, TrackId track_id,
                std::vector<Keypoint> keypoints);

  const std::string& video_id() const noexcept { return video_id_; }
  FrameIndex frame_index() const noexcept { return frame_index_; }
  TrackId track_id() const noexcept { return track_id_; }
  std::span<const Keypoint> keypoints() const noexcept { return keypoints_; }
  std::size_t keypoint_count() const noexcept { return keypoints_.size(); }

  friend bool operator==(const PoseDetection&, const PoseDetection&) = default;

 private:
  std::string video_id_;
  FrameIndex frame_index_ = 0;
  TrackId track_id_ = 0;
  std::vector<Keypoint> keypoints_;
};

/// Time-ordered detections of one tracked person within one video.
class Tracklet {
 public:
  Tracklet() = default;
  /// Detections must share video/track ids and keypoint count, with strictly
  /// increasing frame indices.
  Tracklet(std::string video_id, TrackId track_id, std::vector<PoseDetection> detections);

  const std::string& video_id() const noexcept { return video_id_; }
  TrackId track_id() const noexcept { return track_id_; }
  std::span<const PoseDetection> detections() const noexcept { return detections_; }
  std::size_t size() const noexcept { return detections_.size(); }
  bool empty() const noexcept { return detections_.empty(); }

  friend bool operator==(const Tracklet&, const Tracklet&) = default;

 private:
  std::string video_id_;
  TrackId track_id_ = 0;
  std::vector<PoseDetection> detections_;
};

struct FrameLabel {
  std::string video_id;
  FrameIndex frame_index = 0;
  Label label = Label::Normal;
  friend bool operator==(const FrameLabel&, const FrameLabel&) = default;
};

enum class WindowLabelRule : std::uint8_t { AnyAnomalous, Majority };

/// Hip keypoint indices used to locate a person. COCO-17: left 11, right 12.
struct HipIndices {
  std::size_t left = 11;
  std::size_t right = 12;
  friend bool operator==(const HipIndices&, const HipIndices&) = default;
};

struct WindowingConfig {
  std::size_t frames = 24;  // T
  std::size_t stride = 6;
  std::size_t keypoints = 17;  // k
  std::size_t social_nodes = 35;  // N
  double frame_width = 856.0;
  double frame_height = 480.0;
  HipIndices hips{};
  WindowLabelRule label_rule = WindowLabelRule::AnyAnomalous;

  /// Throws std::invalid_argument when any invariant is violated.
  void validate() const;
  Point2 frame_center() const noexcept { return {frame_width / 2.0, frame_height / 2.0}; }

  friend bool operator==(const WindowingConfig&, const WindowingConfig&) = default;
};

// ---------------------------------------------------------------------------
// Tensors
// ---------------------------------------------------------------------------

/// Dense frames x nodes x 2 coordinate tensor, row-major.
class CoordTensor {
 public:
  CoordTensor() = default;
  CoordTensor(std::size_t frames, std::size_t nodes);
  CoordTensor(std::size_t frames, std::size_t nodes, std::vector<double> values);

  std::size_t frames() const noexcept { return frames_; }
  std::size_t nodes() const noexcept { return nodes_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool same_shape(const CoordTensor& other) const noexcept {
    return frames_ == other.frames_ && nodes_ == other.nodes_;
  }

  double at(std::size_t t, std::size_t j, std::size_t c) const noexcept {
    return values_[(t * nodes_ + j) * 2 + c];
  }
  double& at(std::size_t t, std::size_t j, std::size_t c) noexcept {
    return values_[(t * nodes_ + j) * 2 + c];
  }
  Point2 point(std::size_t t, std::size_t j) const noexcept { return {at(t, j, 0), at(t, j, 1)}; }
  void set_point(std::size_t t, std::size_t j, Point2 p) noexcept {
    at(t, j, 0) = p.x;
    at(t, j, 1) = p.y;
  }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  friend bool operator==(const CoordTensor&, const CoordTensor&) = default;

 private:
  std::size_t frames_ = 0;
  std::size_t nodes_ = 0;
  std::vector<double> values_;
};

/// One T x k x 2 input sequence with provenance and label.
class FeatureWindow {
 public:
  FeatureWindow() = default;
  /// `mask` holds frames*nodes entries (1 = real data). Throws
  /// std::invalid_argument on non-finite coords, a mask of the wrong size, or
  /// a masked-out entry that is not exactly (0,0).
  FeatureWindow(CoordTensor coords, std::vector<std::uint8_t> mask, std::string video_id,
                FrameIndex start_frame, std::vector<TrackId> track_ids, Label label, Split split);

  /// Convenience: all-true mask.
  static FeatureWindow dense(CoordTensor coords, std::string video_id, FrameIndex start_frame,
                             std::vector<TrackId> track_ids, Label label, Split split);

  const CoordTensor& coords() const noexcept { return coords_; }
  std::span<const std::uint8_t> mask() const noexcept { return mask_; }
  bool occupied(std::size_t t, std::size_t j) const noexcept {
    return mask_[t * coords_.nodes() + j] != 0;
  }
  const std::string& video_id() const noexcept { return video_id_; }
  FrameIndex start_frame() const noexcept { return start_frame_; }
  std::size_t frames() const noexcept { return coords_.frames(); }
  std::size_t nodes() const noexcept { return coords_.nodes(); }
  std::span<const TrackId> track_ids() const noexcept { return track_ids_; }
  Label label() const noexcept { return label_; }
  Split split() const noexcept { return split_; }

  friend bool operator==(const FeatureWindow&, const FeatureWindow&) = default;

 private:
  CoordTensor coords_;
  std::vector<std::uint8_t> mask_;
  std::string video_id_;
  FrameIndex start_frame_ = 0;
  std::vector<TrackId> track_ids_;
  Label label_ = Label::Normal;
  Split split_ = Split::Train;
};

/// Element-wise mean of P windows sharing one shape.
class MeanTensor {
 public:
  MeanTensor(CoordTensor values, std::size_t sample_count);

  const CoordTensor& values() const noexcept { return values_; }
  std::size_t sample_count() const noexcept { return sample_count_; }

 private:
  CoordTensor values_;
  std::size_t sample_count_;
};

struct SplitCounts {
  std::size_t train = 0;
  std::size_t val_normal = 0;
  std::size_t val_anomalous = 0;
  friend bool operator==(const SplitCounts&, const SplitCounts&) = default;
};

/// Distances between the training-normal mean and the two validation means,
/// plus their signed difference (sdom = delta_a - delta_n).
class SdomReport {
 public:
  SdomReport(double delta_n, double delta_a, FeatureType feature_type, SplitCounts counts);

  double delta_n() const noexcept { return delta_n_; }
  double delta_a() const noexcept { return delta_a_; }
  double sdom() const noexcept { return sdom_; }
  FeatureType feature_type() const noexcept { return feature_type_; }
  const SplitCounts& counts() const noexcept { return counts_; }

 private:
  double delta_n_;
  double delta_a_;
  double sdom_;
  FeatureType feature_type_;
  SplitCounts counts_;
};

// ---------------------------------------------------------------------------
// Latent space and scores
// ---------------------------------------------------------------------------

struct EmbeddingRecord {
  std::vector<double> vector;
  Split split = Split::Train;
  std::optional<std::string> source_window;
  friend bool operator==(const EmbeddingRecord&, const EmbeddingRecord&) = default;
};

struct EmbeddingPrior {
  std::vector<double> mu_normal;
  friend bool operator==(const EmbeddingPrior&, const EmbeddingPrior&) = default;
};

struct ScoredFrame {
  std::string video_id;
  FrameIndex frame_index = 0;
  double score = 0.0;  // higher = more anomalous
  Label label = Label::Normal;
  friend bool operator==(const ScoredFrame&, const ScoredFrame&) = default;
};

struct MetricsReport {
  double auc_roc = 0.0;
  double auc_pr = 0.0;
  double eer = 0.0;
  double eer_threshold = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::size_t uncovered_frames = 0;

  /// Throws std::invalid_argument if a value is non-finite or out of [0,1].
  void validate() const;
};

class BoxStats {
 public:
  /// Throws std::invalid_argument unless lower <= q1 <= median <= q3 <= upper.
  BoxStats(double lower_fence, double q1, double median, double q3, double upper_fence);

  double lower_fence() const noexcept { return lower_fence_; }
  double q1() const noexcept { return q1_; }
  double median() const noexcept { return median_; }
  double q3() const noexcept { return q3_; }
  double upper_fence() const noexcept { return upper_fence_; }

 private:
  double lower_fence_, q1_, median_, q3_, upper_fence_;
};

}  // namespace skeldiff
