#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "skeldiff/features.hpp"
#include "skeldiff/ingest.hpp"
#include "skeldiff/types.hpp"

// Seeded synthetic skeleton datasets with controllable anomaly separation.
//
// Normal people drift linearly with Gaussian joint jitter. Validation videos
// carry one anomalous segment during which every person in the video is
// altered by the selected modes; the ground-truth labels mark exactly that
// segment. Training videos are all-normal and unlabeled.
//
// Randomness comes from std::mt19937_64 (its output sequence is fixed by the
// C++ standard) with uniforms taken from the top 53 bits and normals from the
// Box-Muller transform, so a seed reproduces across toolchains.

namespace skeldiff {

enum class AnomalyMode : std::uint8_t {
  /// Extra drift in +x: `magnitude` pixels per `shift_period` frames.
  TrajectoryShift,
  /// Every non-hip joint pushed `magnitude` pixels away from the hip midpoint.
  PoseDeform,
  /// People walk toward the scene centroid at `magnitude` pixels per frame.
  GroupConverge,
};

struct AnomalySpec {
  AnomalyMode mode = AnomalyMode::TrajectoryShift;
  double magnitude = 0.0;
};

struct SynthSpec {
  std::size_t n_videos = 8;
  std::size_t train_videos = 4;  // the first `train_videos` videos
  std::size_t frames_per_video = 240;
  std::size_t persons_per_video = 3;
  std::size_t keypoints = 17;
  HipIndices hips{};
  double frame_width = 856.0;
  double frame_height = 480.0;
  double max_speed = 0.5;     // px/frame, per axis, uniform in [-max, max]
  double jitter_std = 1.5;    // px, per joint coordinate
  double person_height = 120.0;
  std::vector<AnomalySpec> anomalies{{AnomalyMode::TrajectoryShift, 50.0}};
  double anomaly_fraction = 0.35;  // of each validation video's frames
  std::size_t shift_period = 24;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on an infeasible spec.
  void validate() const;
};

std::string_view to_string(AnomalyMode mode);
AnomalyMode parse_anomaly_mode(std::string_view text);

/// Deterministic dataset; `config` supplies T, stride, N and hip indices for
/// the bundle (its k and frame size are overwritten from the spec).
DatasetBundle generate(const SynthSpec& spec, const WindowingConfig& config = {});

/// Sidecar JSON describing the spec and generator.
std::string synth_spec_to_json(const SynthSpec& spec);

enum class OracleKind { Perfect, Random, DistanceToTrainMean };

struct OracleMode {
  OracleKind kind = OracleKind::Perfect;
  std::uint64_t seed = 0;                         // Random only
  FeatureType feature = FeatureType::Pose;        // DistanceToTrainMean only
};

OracleKind parse_oracle_kind(std::string_view text);

/// Anomaly-polarity scores for every labeled frame of the validation videos.
///   Perfect             1 for anomalous frames, 0 otherwise
///   Random              seeded uniform [0,1)
///   DistanceToTrainMean unscaled distance of each validation window to the
///                       training-normal mean, max-aggregated per frame
std::vector<ScoredFrame> oracle_scores(const DatasetBundle& bundle, const OracleMode& mode);

}  // namespace skeldiff
