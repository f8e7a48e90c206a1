#include "skeldiff/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace skeldiff {

ParseError::ParseError(const std::string& what, std::size_t line)
    : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
      line_(line) {}

std::string_view to_string(Label label) {
  return label == Label::Normal ? "normal" : "anomalous";
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train:
      return "train";
    case Split::ValidationNormal:
      return "val_normal";
    case Split::ValidationAnomalous:
      return "val_anomalous";
  }
  return "?";
}

std::string_view to_string(FeatureType type) {
  switch (type) {
    case FeatureType::Pose:
      return "pose";
    case FeatureType::AbsoluteTrajectory:
      return "absolute_trajectory";
    case FeatureType::SocialTrajectory:
      return "social_trajectory";
  }
  return "?";
}

std::string_view short_name(FeatureType type) {
  switch (type) {
    case FeatureType::Pose:
      return "pose";
    case FeatureType::AbsoluteTrajectory:
      return "traj";
    case FeatureType::SocialTrajectory:
      return "social";
  }
  return "?";
}

std::string_view to_string(VideoSplit split) {
  return split == VideoSplit::Train ? "train" : "val";
}

Label parse_label(std::string_view text) {
  if (text == "normal" || text == "0") return Label::Normal;
  if (text == "anomalous" || text == "1") return Label::Anomalous;
  throw ParseError("unknown label '" + std::string(text) + "'");
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::Train;
  if (text == "val_normal") return Split::ValidationNormal;
  if (text == "val_anomalous") return Split::ValidationAnomalous;
  throw ParseError("unknown split '" + std::string(text) + "'");
}

FeatureType parse_feature_type(std::string_view text) {
  if (text == "pose") return FeatureType::Pose;
  if (text == "traj" || text == "absolute_trajectory") return FeatureType::AbsoluteTrajectory;
  if (text == "social" || text == "social_trajectory") return FeatureType::SocialTrajectory;
  throw ParseError("unknown feature type '" + std::string(text) + "'");
}

VideoSplit parse_video_split(std::string_view text) {
  if (text == "train") return VideoSplit::Train;
  if (text == "val") return VideoSplit::Validation;
  throw ParseError("unknown video split '" + std::string(text) + "'");
}

Keypoint::Keypoint(double x, double y, double confidence) : x_(x), y_(y), confidence_(confidence) {
  if (!std::isfinite(x) || !std::isfinite(y)) {
    throw std::invalid_argument("keypoint coordinates must be finite");
  }
  if (!(confidence >= 0.0 && confidence <= 1.0)) {
    throw std::invalid_argument("keypoint confidence must lie in [0,1]");
  }
}

PoseDetection::PoseDetection(std::string video_id, FrameIndex frame_index, TrackId track_id,
                             std::vector<Keypoint> keypoints)
    : video_id_(std::move(video_id)),
      frame_index_(frame_index),
      track_id_(track_id),
      keypoints_(std::move(keypoints)) {
  if (frame_index_ < 0) throw std::invalid_argument("frame_index must be non-negative");
  if (keypoints_.empty()) throw std::invalid_argument("detection has no keypoints");
}

Tracklet::Tracklet(std::string video_id, TrackId track_id, std::vector<PoseDetection> detections)
    : video_id_(std::move(video_id)), track_id_(track_id), detections_(std::move(detections)) {
  for (std::size_t i = 0; i < detections_.size(); ++i) {
    const auto& d = detections_[i];
    if (d.video_id() != video_id_ || d.track_id() != track_id_) {
      throw std::invalid_argument("tracklet detections must share video_id and track_id");
    }
    if (d.keypoint_count() != detections_.front().keypoint_count()) {
      throw std::invalid_argument("tracklet detections must share keypoint count");
    }
    if (i > 0 && d.frame_index() <= detections_[i - 1].frame_index()) {
      throw std::invalid_argument("tracklet frame indices must be strictly increasing");
    }
  }
}

void WindowingConfig::validate() const {
  if (frames < 2) throw std::invalid_argument("T must be at least 2");
  if (stride < 1) throw std::invalid_argument("stride must be at least 1");
  if (keypoints < 1) throw std::invalid_argument("k must be at least 1");
  if (social_nodes < 1) throw std::invalid_argument("N must be at least 1");
  if (!(frame_width > 0.0) || !(frame_height > 0.0) || !std::isfinite(frame_width) ||
      !std::isfinite(frame_height)) {
    throw std::invalid_argument("frame dimensions must be positive");
  }
}

CoordTensor::CoordTensor(std::size_t frames, std::size_t nodes)
    : frames_(frames), nodes_(nodes), values_(frames * nodes * 2, 0.0) {}

CoordTensor::CoordTensor(std::size_t frames, std::size_t nodes, std::vector<double> values)
    : frames_(frames), nodes_(nodes), values_(std::move(values)) {
  if (values_.size() != frames_ * nodes_ * 2) {
    throw std::invalid_argument("tensor value count does not match frames x nodes x 2");
  }
}

FeatureWindow::FeatureWindow(CoordTensor coords, std::vector<std::uint8_t> mask,
                             std::string video_id, FrameIndex start_frame,
                             std::vector<TrackId> track_ids, Label label, Split split)
    : coords_(std::move(coords)),
      mask_(std::move(mask)),
      video_id_(std::move(video_id)),
      start_frame_(start_frame),
      track_ids_(std::move(track_ids)),
      label_(label),
      split_(split) {
  if (mask_.size() != coords_.frames() * coords_.nodes()) {
    throw std::invalid_argument("window mask size does not match frames x nodes");
  }
  if (!std::all_of(coords_.values().begin(), coords_.values().end(),
                   [](double v) { return std::isfinite(v); })) {
    throw std::invalid_argument("window coordinates must be finite");
  }
  for (std::size_t t = 0; t < coords_.frames(); ++t) {
    for (std::size_t j = 0; j < coords_.nodes(); ++j) {
      if (!occupied(t, j) && (coords_.at(t, j, 0) != 0.0 || coords_.at(t, j, 1) != 0.0)) {
        throw std::invalid_argument("masked-out window entries must be exactly (0,0)");
      }
    }
  }
  const bool anomalous = label_ == Label::Anomalous;
  if (split_ == Split::Train ? anomalous : (split_ == Split::ValidationAnomalous) != anomalous) {
    throw std::invalid_argument("window split disagrees with window label");
  }
}

FeatureWindow FeatureWindow::dense(CoordTensor coords, std::string video_id,
                                   FrameIndex start_frame, std::vector<TrackId> track_ids,
                                   Label label, Split split) {
  std::vector<std::uint8_t> mask(coords.frames() * coords.nodes(), 1);
  return FeatureWindow(std::move(coords), std::move(mask), std::move(video_id), start_frame,
                       std::move(track_ids), label, split);
}

MeanTensor::MeanTensor(CoordTensor values, std::size_t sample_count)
    : values_(std::move(values)), sample_count_(sample_count) {
  if (sample_count_ == 0) throw std::invalid_argument("mean tensor needs at least one sample");
}

SdomReport::SdomReport(double delta_n, double delta_a, FeatureType feature_type,
                       SplitCounts counts)
    : delta_n_(delta_n),
      delta_a_(delta_a),
      sdom_(delta_a - delta_n),
      feature_type_(feature_type),
      counts_(counts) {
  if (!std::isfinite(delta_n) || !std::isfinite(delta_a) || delta_n < 0.0 || delta_a < 0.0) {
    throw std::invalid_argument("mean distances must be finite and non-negative");
  }
}

void MetricsReport::validate() const {
  for (double v : {auc_roc, auc_pr, eer}) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw std::invalid_argument("metric value outside [0,1]");
    }
  }
  if (!std::isfinite(eer_threshold)) throw std::invalid_argument("EER threshold must be finite");
}

BoxStats::BoxStats(double lower_fence, double q1, double median, double q3, double upper_fence)
    : lower_fence_(lower_fence), q1_(q1), median_(median), q3_(q3), upper_fence_(upper_fence) {
  if (!(lower_fence <= q1 && q1 <= median && median <= q3 && q3 <= upper_fence)) {
    throw std::invalid_argument("box statistics must be ordered");
  }
}

}  // namespace skeldiff
