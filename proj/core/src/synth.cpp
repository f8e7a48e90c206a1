#include "skeldiff/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "skeldiff/analysis.hpp"
#include "skeldiff/metrics.hpp"

namespace skeldiff {

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * n); }

  double normal() {
    if (spare_) {
      const double v = *spare_;
      spare_.reset();
      return v;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

// splitmix64 finalizer, used to derive independent per-video seeds.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Joint offsets in person heights, hip midpoint at the origin, y down.
std::vector<Point2> skeleton_template(std::size_t k, const HipIndices& hips) {
  if (k == 17) {
    return {{0.0, -0.85},   {-0.03, -0.88}, {0.03, -0.88}, {-0.06, -0.86}, {0.06, -0.86},
            {-0.12, -0.65}, {0.12, -0.65},  {-0.16, -0.42}, {0.16, -0.42}, {-0.18, -0.2},
            {0.18, -0.2},   {-0.08, 0.0},   {0.08, 0.0},   {-0.09, 0.25}, {0.09, 0.25},
            {-0.1, 0.5},    {0.1, 0.5}};
  }
  std::vector<Point2> out(k);
  for (std::size_t j = 0; j < k; ++j) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(k);
    out[j] = {0.15 * std::cos(a), -0.4 + 0.45 * std::sin(a)};
  }
  out[hips.left] = {-0.08, 0.0};
  out[hips.right] = {0.08, 0.0};
  return out;
}

std::string video_name(std::size_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "synth_%04zu", v);
  return buf;
}

}  // namespace

std::string_view to_string(AnomalyMode mode) {
  switch (mode) {
    case AnomalyMode::TrajectoryShift:
      return "trajectory_shift";
    case AnomalyMode::PoseDeform:
      return "pose_deform";
    case AnomalyMode::GroupConverge:
      return "group_converge";
  }
  return "?";
}

AnomalyMode parse_anomaly_mode(std::string_view text) {
  if (text == "trajectory_shift" || text == "shift") return AnomalyMode::TrajectoryShift;
  if (text == "pose_deform" || text == "deform") return AnomalyMode::PoseDeform;
  if (text == "group_converge" || text == "converge") return AnomalyMode::GroupConverge;
  throw std::invalid_argument("unknown anomaly mode '" + std::string(text) + "'");
}

OracleKind parse_oracle_kind(std::string_view text) {
  if (text == "perfect") return OracleKind::Perfect;
  if (text == "random") return OracleKind::Random;
  if (text == "distance") return OracleKind::DistanceToTrainMean;
  throw std::invalid_argument("unknown oracle '" + std::string(text) + "'");
}

void SynthSpec::validate() const {
  if (train_videos > n_videos) throw std::invalid_argument("train_videos exceeds n_videos");
  if (frames_per_video == 0) throw std::invalid_argument("frames_per_video must be positive");
  if (keypoints == 0) throw std::invalid_argument("keypoints must be positive");
  if (hips.left >= keypoints || hips.right >= keypoints) {
    throw std::invalid_argument("hip indices outside the keypoint layout");
  }
  if (!(frame_width > 0.0) || !(frame_height > 0.0)) {
    throw std::invalid_argument("frame dimensions must be positive");
  }
  if (!(max_speed >= 0.0) || !(jitter_std >= 0.0) || !(person_height > 0.0)) {
    throw std::invalid_argument("motion parameters must be non-negative");
  }
  if (!(anomaly_fraction >= 0.0 && anomaly_fraction <= 1.0)) {
    throw std::invalid_argument("anomaly_fraction must lie in [0,1]");
  }
  if (anomaly_fraction > 0.0 && anomalies.empty()) {
    throw std::invalid_argument("anomaly_fraction > 0 needs at least one anomaly mode");
  }
  for (const auto& a : anomalies) {
    if (!(a.magnitude >= 0.0) || !std::isfinite(a.magnitude)) {
      throw std::invalid_argument("anomaly magnitude must be finite and non-negative");
    }
  }
  if (shift_period == 0) throw std::invalid_argument("shift_period must be positive");
}

DatasetBundle generate(const SynthSpec& spec, const WindowingConfig& config) {
  spec.validate();
  DatasetBundle bundle;
  bundle.config = config;
  bundle.config.keypoints = spec.keypoints;
  bundle.config.hips = spec.hips;
  bundle.config.frame_width = spec.frame_width;
  bundle.config.frame_height = spec.frame_height;
  bundle.config.validate();

  const auto tmpl = skeleton_template(spec.keypoints, spec.hips);
  const auto F = static_cast<FrameIndex>(spec.frames_per_video);

  for (std::size_t v = 0; v < spec.n_videos; ++v) {
    Rng rng(mix(spec.seed ^ mix(v + 1)));
    const auto video = video_name(v);
    const bool train = v < spec.train_videos;
    bundle.videos[video] = {train ? VideoSplit::Train : VideoSplit::Validation, spec.frame_width,
                            spec.frame_height};

    FrameIndex seg_begin = 0, seg_end = 0;
    if (!train && spec.anomaly_fraction > 0.0) {
      const auto len = static_cast<FrameIndex>(
          std::llround(spec.anomaly_fraction * static_cast<double>(spec.frames_per_video)));
      seg_begin = static_cast<FrameIndex>(rng.index(static_cast<std::size_t>(F - len) + 1));
      seg_end = seg_begin + len;
    }

    struct Person {
      Point2 base, velocity;
      double scale;
    };
    std::vector<Person> people(spec.persons_per_video);
    for (auto& p : people) {
      p.base = {rng.uniform(0.2, 0.8) * spec.frame_width,
                rng.uniform(0.35, 0.8) * spec.frame_height};
      p.velocity = {rng.uniform(-spec.max_speed, spec.max_speed),
                    rng.uniform(-spec.max_speed, spec.max_speed)};
      p.scale = spec.person_height * rng.uniform(0.8, 1.2);
    }
    Point2 centroid{};
    for (const auto& p : people) {
      centroid.x += p.base.x + p.velocity.x * static_cast<double>(seg_begin);
      centroid.y += p.base.y + p.velocity.y * static_cast<double>(seg_begin);
    }
    if (!people.empty()) {
      centroid.x /= static_cast<double>(people.size());
      centroid.y /= static_cast<double>(people.size());
    }

    for (std::size_t pi = 0; pi < people.size(); ++pi) {
      const auto& p = people[pi];
      std::vector<PoseDetection> dets;
      dets.reserve(spec.frames_per_video);
      for (FrameIndex f = 0; f < F; ++f) {
        Point2 hip{p.base.x + p.velocity.x * static_cast<double>(f),
                   p.base.y + p.velocity.y * static_cast<double>(f)};
        double deform = 0.0;
        if (seg_end > seg_begin && f >= seg_begin) {
          // Displacements accumulate through the segment and persist after it.
          const double elapsed = static_cast<double>(std::min(f + 1, seg_end) - seg_begin);
          const bool inside = f < seg_end;
          for (const auto& a : spec.anomalies) {
            switch (a.mode) {
              case AnomalyMode::TrajectoryShift:
                hip.x += a.magnitude * elapsed / static_cast<double>(spec.shift_period);
                break;
              case AnomalyMode::GroupConverge: {
                const Point2 start{p.base.x + p.velocity.x * static_cast<double>(seg_begin),
                                   p.base.y + p.velocity.y * static_cast<double>(seg_begin)};
                const double dx = centroid.x - start.x;
                const double dy = centroid.y - start.y;
                const double dist = std::hypot(dx, dy);
                if (dist > 0.0) {
                  const double step = std::min(a.magnitude * elapsed, 0.9 * dist);
                  hip.x += step * dx / dist;
                  hip.y += step * dy / dist;
                }
                break;
              }
              case AnomalyMode::PoseDeform:
                if (inside) deform += a.magnitude;
                break;
            }
          }
        }
        std::vector<Keypoint> kps;
        kps.reserve(spec.keypoints);
        for (std::size_t j = 0; j < spec.keypoints; ++j) {
          double ox = tmpl[j].x * p.scale;
          double oy = tmpl[j].y * p.scale;
          if (deform != 0.0 && j != spec.hips.left && j != spec.hips.right) {
            const double n = std::hypot(ox, oy);
            if (n > 0.0) {
              ox += deform * ox / n;
              oy += deform * oy / n;
            }
          }
          const double x = hip.x + ox + spec.jitter_std * rng.normal();
          const double y = hip.y + oy + spec.jitter_std * rng.normal();
          kps.emplace_back(x, y, rng.uniform(0.5, 1.0));
        }
        dets.emplace_back(video, f, static_cast<TrackId>(pi), std::move(kps));
      }
      bundle.tracklets.emplace_back(video, static_cast<TrackId>(pi), std::move(dets));
    }

    if (!train) {
      for (FrameIndex f = 0; f < F; ++f) {
        const bool anomalous = f >= seg_begin && f < seg_end;
        bundle.labels.push_back({video, f, anomalous ? Label::Anomalous : Label::Normal});
      }
    }
  }
  return bundle;
}

std::string synth_spec_to_json(const SynthSpec& spec) {
  nlohmann::json doc;
  doc["generator"] = {{"engine", "mt19937_64"},
                      {"uniform", "top-53-bits"},
                      {"normal", "box-muller"},
                      {"video_seed", "splitmix64(seed ^ splitmix64(video_index + 1))"}};
  doc["seed"] = spec.seed;
  doc["n_videos"] = spec.n_videos;
  doc["train_videos"] = spec.train_videos;
  doc["frames_per_video"] = spec.frames_per_video;
  doc["persons_per_video"] = spec.persons_per_video;
  doc["keypoints"] = spec.keypoints;
  doc["hips"] = {spec.hips.left, spec.hips.right};
  doc["frame_width"] = spec.frame_width;
  doc["frame_height"] = spec.frame_height;
  doc["max_speed"] = spec.max_speed;
  doc["jitter_std"] = spec.jitter_std;
  doc["person_height"] = spec.person_height;
  doc["anomaly_fraction"] = spec.anomaly_fraction;
  doc["shift_period"] = spec.shift_period;
  auto modes = nlohmann::json::array();
  for (const auto& a : spec.anomalies) {
    modes.push_back({{"mode", std::string(to_string(a.mode))}, {"magnitude", a.magnitude}});
  }
  doc["anomalies"] = std::move(modes);
  return doc.dump(2) + "\n";
}

std::vector<ScoredFrame> oracle_scores(const DatasetBundle& bundle, const OracleMode& mode) {
  std::vector<FrameLabel> evaluated;
  for (const auto& l : bundle.labels) {
    auto it = bundle.videos.find(l.video_id);
    if (it != bundle.videos.end() && it->second.split == VideoSplit::Validation) {
      evaluated.push_back(l);
    }
  }

  std::vector<ScoredFrame> out;
  switch (mode.kind) {
    case OracleKind::Perfect:
      for (const auto& l : evaluated) {
        out.push_back({l.video_id, l.frame_index, l.label == Label::Anomalous ? 1.0 : 0.0,
                       l.label});
      }
      return out;
    case OracleKind::Random: {
      Rng rng(mix(mode.seed));
      for (const auto& l : evaluated) {
        out.push_back({l.video_id, l.frame_index, rng.uniform(), l.label});
      }
      return out;
    }
    case OracleKind::DistanceToTrainMean: {
      const auto set = build_windows(bundle, mode.feature, default_center_policy(mode.feature));
      const auto train = select_split(set.windows, Split::Train);
      const auto mu = mean_tensor(train);
      std::vector<FeatureWindow> val;
      for (const auto& w : set.windows) {
        if (w.split() != Split::Train) val.push_back(w);
      }
      const auto dist = distances_to_mean(val, mu);
      std::vector<WindowScore> scores;
      scores.reserve(val.size());
      for (std::size_t i = 0; i < val.size(); ++i) {
        scores.push_back({val[i].video_id(), val[i].start_frame(), val[i].frames(),
                          dist.values[i]});
      }
      return windows_to_frame_scores(scores, evaluated).frames;
    }
  }
  return out;
}

}  // namespace skeldiff
