#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "skeldiff/types.hpp"

// Canonical line-delimited input formats:
//
//   tracklets   video_id<TAB>frame_index<TAB>track_id<TAB>x1,y1,c1;x2,y2,c2;...
//   labels      video_id,frame_index,label          (label in {0,1})
//   embeddings  dim=<d> mu=<v1,...,vd>              (first line)
//               split<TAB>v1,...,vd[<TAB>source]
//   scores      video_id,frame_index,score
//   manifest    JSON {video_id: {"split": "train"|"val", "width": w, "height": h}}
//
// Blank lines and lines starting with '#' are ignored in the text formats.

namespace skeldiff {

struct VideoInfo {
  VideoSplit split = VideoSplit::Validation;
  double width = 0.0;
  double height = 0.0;
  friend bool operator==(const VideoInfo&, const VideoInfo&) = default;
};

using Manifest = std::map<std::string, VideoInfo>;

struct DatasetBundle {
  std::vector<Tracklet> tracklets;
  std::vector<FrameLabel> labels;
  WindowingConfig config;
  Manifest videos;

  /// Config with the frame size of `video_id` from the manifest.
  WindowingConfig config_for(const std::string& video_id) const;
  VideoSplit split_of(const std::string& video_id) const;
};

/// (video, frame) -> label lookup.
class LabelIndex {
 public:
  LabelIndex() = default;
  explicit LabelIndex(std::span<const FrameLabel> labels);

  std::optional<Label> find(const std::string& video_id, FrameIndex frame) const;
  /// Labeled frames of one video in ascending order; empty if none.
  const std::map<FrameIndex, Label>& frames_of(const std::string& video_id) const;
  std::size_t size() const noexcept { return count_; }

 private:
  std::unordered_map<std::string, std::map<FrameIndex, Label>> by_video_;
  std::size_t count_ = 0;
};

// Tracklets ---------------------------------------------------------------

/// Groups detections by (video_id, track_id), sorted by frame. Output is
/// ordered by (video_id, track_id) so shuffled input yields identical results.
std::vector<Tracklet> parse_tracklets(std::istream& in, std::size_t keypoints);
void write_tracklets(std::ostream& out, std::span<const Tracklet> tracklets);

// Labels ------------------------------------------------------------------

/// Sorted by (video_id, frame_index). An optional `video_id,frame_index,label`
/// header line is skipped.
std::vector<FrameLabel> parse_labels(std::istream& in);
void write_labels(std::ostream& out, std::span<const FrameLabel> labels);

// Embeddings --------------------------------------------------------------

struct EmbeddingSet {
  std::vector<EmbeddingRecord> records;
  EmbeddingPrior prior;
  std::size_t dimension() const noexcept { return prior.mu_normal.size(); }
};

EmbeddingSet parse_embeddings(std::istream& in);
void write_embeddings(std::ostream& out, const EmbeddingSet& set);

// Scores ------------------------------------------------------------------

enum class ScorePolarity { AnomalyScore, NormalityScore };

/// Joins each score row with its frame label. Normality scores are negated so
/// every stored score reads "higher = more anomalous". Output is sorted by
/// (video_id, frame_index).
std::vector<ScoredFrame> parse_scores(std::istream& in, ScorePolarity polarity,
                                      const LabelIndex& labels);
/// Writes scores in anomaly polarity.
void write_scores(std::ostream& out, std::span<const ScoredFrame> scores);

// Manifest ----------------------------------------------------------------

Manifest parse_manifest(std::istream& in);
std::string manifest_to_json(const Manifest& manifest);

// Bundles -----------------------------------------------------------------

struct BundlePaths {
  std::filesystem::path tracklets;
  std::filesystem::path labels;
  std::filesystem::path manifest;

  /// tracklets.tsv, labels.csv and manifest.json inside `dir`.
  static BundlePaths in_directory(const std::filesystem::path& dir);
};

DatasetBundle load_bundle(const BundlePaths& paths, const WindowingConfig& config);
void save_bundle(const DatasetBundle& bundle, const std::filesystem::path& dir);

struct VideoSummary {
  std::string video_id;
  VideoSplit split = VideoSplit::Validation;
  FrameIndex first_frame = 0;
  FrameIndex last_frame = -1;
  std::size_t detections = 0;
  std::size_t tracks = 0;
  std::size_t labeled_frames = 0;
  std::size_t anomalous_frames = 0;
  /// Distinct frames inside some contiguous tracklet run of length >= T.
  std::size_t window_eligible_frames = 0;
  /// Validation frames with detections but no label.
  std::size_t unlabeled_frames = 0;
};

struct ValidationReport {
  std::vector<VideoSummary> videos;
  std::size_t eligible_frames_train = 0;
  std::size_t eligible_frames_val = 0;
  std::size_t label_gaps = 0;
  std::vector<std::string> warnings;
  std::vector<std::string> fatal;

  bool ok() const noexcept { return fatal.empty(); }
  std::string to_json() const;
};

/// Builds the report without throwing; fatal findings are listed in `fatal`.
ValidationReport inspect_bundle(const DatasetBundle& bundle);

/// As inspect_bundle, but throws ValidationError on any fatal finding
/// (e.g. an anomalous label inside a training video).
ValidationReport validate_bundle(const DatasetBundle& bundle);

}  // namespace skeldiff
