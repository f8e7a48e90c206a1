#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "skeldiff/ingest.hpp"
#include "skeldiff/types.hpp"

// Input formulations built from tracklets:
//   pose windows        T x k x 2, one tracked person
//   trajectory windows  T x 1 x 2, the person's hip midpoint per frame
//   social windows      T x N x 2, every person in the scene, zero-padded

namespace skeldiff {

enum class CenterPolicy { None, FirstPoseToFrameCenter };

/// Pose and trajectory windows are centered by default; social windows are not.
CenterPolicy default_center_policy(FeatureType type) noexcept;

/// Midpoint of the two hip keypoints. Throws std::invalid_argument if the
/// detection has no keypoint at either hip index.
Point2 person_center(const PoseDetection& detection, const HipIndices& hips = {});

/// Half-open index range [begin, end) of consecutive frames in a tracklet.
struct FrameRun {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t length() const noexcept { return end - begin; }
  friend bool operator==(const FrameRun&, const FrameRun&) = default;
};

std::vector<FrameRun> contiguous_runs(const Tracklet& tracklet);

/// floor((L - T) / stride) + 1 for L >= T, else 0.
std::size_t window_count(std::size_t run_length, std::size_t frames, std::size_t stride) noexcept;

/// Reduces per-frame labels to one window label under `rule`.
Label label_window(std::span<const Label> frame_labels, WindowLabelRule rule);

/// Labels frames [start, start + frames) of one video. Training frames are
/// implicitly Normal (an Anomalous training label throws ValidationError);
/// a validation frame without a label throws ValidationError.
Label label_window(const LabelIndex& labels, const std::string& video_id, FrameIndex start,
                   std::size_t frames, VideoSplit split, WindowLabelRule rule);

/// Translates every point by frame_center - anchor(first frame). The anchor is
/// the hip midpoint for multi-node windows and node 0 for single-node windows.
CoordTensor center_window(const CoordTensor& coords, const WindowingConfig& cfg,
                          CenterPolicy policy);

/// Social variant: the anchor is the centroid of the occupied nodes in the
/// first frame that has any, and only occupied entries move.
CoordTensor center_social_window(const CoordTensor& coords, std::span<const std::uint8_t> mask,
                                 const WindowingConfig& cfg, CenterPolicy policy);

std::vector<FeatureWindow> build_pose_windows(const Tracklet& tracklet, const WindowingConfig& cfg,
                                              const LabelIndex& labels, VideoSplit split,
                                              CenterPolicy center);

std::vector<FeatureWindow> build_trajectory_windows(const Tracklet& tracklet,
                                                    const WindowingConfig& cfg,
                                                    const LabelIndex& labels, VideoSplit split,
                                                    CenterPolicy center);

struct SocialOptions {
  /// Keep the N lowest track ids instead of failing on crowded windows.
  bool truncate = false;
};

struct WindowSet {
  FeatureType type = FeatureType::Pose;
  std::vector<FeatureWindow> windows;
  std::vector<std::string> warnings;
};

/// Per-video windows over wall-clock frames. Throws std::length_error naming
/// the window when more than N tracks appear and truncation is off.
WindowSet build_social_windows(const DatasetBundle& bundle, CenterPolicy center,
                               SocialOptions options = {});

/// Builds every window of one feature type for the whole bundle, in canonical
/// (video_id, track_ids, start_frame) order.
WindowSet build_windows(const DatasetBundle& bundle, FeatureType type, CenterPolicy center,
                        SocialOptions options = {});

void sort_canonical(std::vector<FeatureWindow>& windows);

/// Windows of one split, in input order.
std::vector<FeatureWindow> select_split(std::span<const FeatureWindow> windows, Split split);

// Window file: a header line followed by one window per line,
//   video_id<TAB>start<TAB>track_ids<TAB>label<TAB>split<TAB>coords<TAB>mask
// with coords flattened row-major and mask as a string of 0/1.
void write_windows(std::ostream& out, const WindowSet& set);
WindowSet parse_windows(std::istream& in);

}  // namespace skeldiff
