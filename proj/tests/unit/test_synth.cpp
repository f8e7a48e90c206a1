#include <cmath>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "skeldiff/analysis.hpp"
#include "skeldiff/ingest.hpp"
#include "skeldiff/metrics.hpp"
#include "skeldiff/synth.hpp"
#include "skeldiff/text.hpp"

using namespace skeldiff;

namespace {

SynthSpec small_spec(std::uint64_t seed = 1) {
  SynthSpec spec;
  spec.n_videos = 6;
  spec.train_videos = 3;
  spec.frames_per_video = 96;
  spec.seed = seed;
  return spec;
}

std::string serialize(const DatasetBundle& b) {
  std::ostringstream out;
  write_tracklets(out, b.tracklets);
  write_labels(out, b.labels);
  out << manifest_to_json(b.videos);
  return out.str();
}

double traj_sdom(double delta, std::uint64_t seed) {
  auto spec = small_spec(seed);
  spec.anomalies = {{AnomalyMode::TrajectoryShift, delta}};
  const auto set = build_windows(generate(spec), FeatureType::AbsoluteTrajectory,
                                 CenterPolicy::FirstPoseToFrameCenter);
  return sdom_report(set.windows, FeatureType::AbsoluteTrajectory).sdom();
}

}  // namespace

TEST_CASE("spec validation") {
  SynthSpec spec;
  CHECK_NOTHROW(spec.validate());
  spec.train_videos = 9;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = {};
  spec.anomaly_fraction = 1.5;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = {};
  spec.anomalies.clear();
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec.anomaly_fraction = 0.0;
  CHECK_NOTHROW(spec.validate());
  spec = {};
  spec.hips = {11, 40};
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  CHECK(parse_anomaly_mode("shift") == AnomalyMode::TrajectoryShift);
  CHECK(parse_anomaly_mode(to_string(AnomalyMode::GroupConverge)) == AnomalyMode::GroupConverge);
  CHECK_THROWS_AS(parse_anomaly_mode("teleport"), std::invalid_argument);
  CHECK(parse_oracle_kind("distance") == OracleKind::DistanceToTrainMean);
}

TEST_CASE("generated bundle shape") {
  const auto spec = small_spec();
  const auto b = generate(spec);
  CHECK(b.videos.size() == 6);
  CHECK(b.tracklets.size() == 6 * 3);
  CHECK(b.labels.size() == 3 * 96);
  CHECK(b.config.keypoints == 17);
  CHECK(b.split_of("synth_0000") == VideoSplit::Train);
  CHECK(b.split_of("synth_0005") == VideoSplit::Validation);
  for (const auto& t : b.tracklets) CHECK(t.size() == 96);
  CHECK(validate_bundle(b).ok());
}

TEST_CASE("labels mark exactly one segment per validation video") {
  const auto spec = small_spec(7);
  const auto b = generate(spec);
  const auto expected = static_cast<std::size_t>(std::llround(spec.anomaly_fraction * 96));
  const LabelIndex index(b.labels);
  for (const auto& [video, info] : b.videos) {
    if (info.split == VideoSplit::Train) {
      CHECK(index.frames_of(video).empty());
      continue;
    }
    std::size_t anomalous = 0, transitions = 0;
    Label prev = Label::Normal;
    for (const auto& [f, l] : index.frames_of(video)) {
      anomalous += l == Label::Anomalous;
      transitions += l != prev;
      prev = l;
    }
    CHECK(anomalous == expected);
    CHECK(transitions <= 2);
  }
}

TEST_CASE("zero anomaly fraction labels everything normal") {
  auto spec = small_spec();
  spec.anomaly_fraction = 0.0;
  for (const auto& l : generate(spec).labels) CHECK(l.label == Label::Normal);
}

TEST_CASE("same seed gives identical bytes, other seeds differ") {
  const auto a = serialize(generate(small_spec(3)));
  CHECK(a == serialize(generate(small_spec(3))));
  CHECK(a != serialize(generate(small_spec(4))));
  CHECK(synth_spec_to_json(small_spec(3)) == synth_spec_to_json(small_spec(3)));
}

TEST_CASE("saved bundle loads back identically") {
  const auto b = generate(small_spec(5));
  const auto dir = std::filesystem::temp_directory_path() / "skeldiff_synth_roundtrip";
  std::filesystem::remove_all(dir);
  save_bundle(b, dir);
  const auto back = load_bundle(BundlePaths::in_directory(dir), b.config);
  CHECK(back.tracklets == b.tracklets);
  CHECK(back.labels == b.labels);
  CHECK(back.videos == b.videos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("larger trajectory shift gives larger trajectory S-DoM") {
  const double s0 = traj_sdom(0.0, 11);
  const double s50 = traj_sdom(50.0, 11);
  const double s100 = traj_sdom(100.0, 11);
  CHECK(s50 > s0);
  CHECK(s100 > s50);
}

TEST_CASE("other anomaly modes separate the matching feature") {
  auto spec = small_spec(12);
  spec.anomalies = {{AnomalyMode::PoseDeform, 30.0}};
  auto b = generate(spec);
  const auto pose = build_windows(b, FeatureType::Pose, CenterPolicy::FirstPoseToFrameCenter);
  CHECK(sdom_report(pose.windows, FeatureType::Pose).sdom() > 0.0);

  spec.anomalies = {{AnomalyMode::GroupConverge, 2.0}};
  spec.persons_per_video = 5;
  b = generate(spec);
  const auto social =
      build_windows(b, FeatureType::SocialTrajectory, CenterPolicy::None);
  CHECK(sdom_report(social.windows, FeatureType::SocialTrajectory).sdom() > 0.0);
}

TEST_CASE("oracle scores") {
  auto spec = small_spec(13);
  spec.anomalies = {{AnomalyMode::TrajectoryShift, 100.0}};
  const auto b = generate(spec);
  const auto perfect = oracle_scores(b, {OracleKind::Perfect});
  CHECK(perfect.size() == 3 * 96);
  CHECK(auc_roc(perfect) == 1.0);
  CHECK(eer(perfect).eer == 0.0);

  const auto random = oracle_scores(b, {OracleKind::Random, 9});
  CHECK(random == oracle_scores(b, {OracleKind::Random, 9}));
  CHECK(random != oracle_scores(b, {OracleKind::Random, 10}));
  for (const auto& s : random) {
    CHECK(s.score >= 0.0);
    CHECK(s.score < 1.0);
  }

  const auto distance =
      oracle_scores(b, {OracleKind::DistanceToTrainMean, 0, FeatureType::AbsoluteTrajectory});
  CHECK(distance.size() == 3 * 96);
  CHECK(auc_roc(distance) > 0.8);
}
