#include "skeldiff/features.hpp"

#include <algorithm>
#include <istream>
#include <iterator>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>
#include <tuple>

#include "skeldiff/text.hpp"

namespace skeldiff {

CenterPolicy default_center_policy(FeatureType type) noexcept {
  return type == FeatureType::SocialTrajectory ? CenterPolicy::None
                                               : CenterPolicy::FirstPoseToFrameCenter;
}

Point2 person_center(const PoseDetection& detection, const HipIndices& hips) {
  const auto kps = detection.keypoints();
  if (hips.left >= kps.size() || hips.right >= kps.size()) {
    throw std::invalid_argument("keypoint layout has no configured hip indices");
  }
  const auto& l = kps[hips.left];
  const auto& r = kps[hips.right];
  return {(l.x() + r.x()) / 2.0, (l.y() + r.y()) / 2.0};
}

std::vector<FrameRun> contiguous_runs(const Tracklet& tracklet) {
  std::vector<FrameRun> runs;
  const auto dets = tracklet.detections();
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= dets.size(); ++i) {
    if (i == dets.size() || dets[i].frame_index() != dets[i - 1].frame_index() + 1) {
      runs.push_back({begin, i});
      begin = i;
    }
  }
  return runs;
}

std::size_t window_count(std::size_t run_length, std::size_t frames, std::size_t stride) noexcept {
  if (stride == 0 || run_length < frames) return 0;
  return (run_length - frames) / stride + 1;
}

Label label_window(std::span<const Label> frame_labels, WindowLabelRule rule) {
  const auto anomalous = static_cast<std::size_t>(
      std::count(frame_labels.begin(), frame_labels.end(), Label::Anomalous));
  if (rule == WindowLabelRule::AnyAnomalous) {
    return anomalous > 0 ? Label::Anomalous : Label::Normal;
  }
  return 2 * anomalous > frame_labels.size() ? Label::Anomalous : Label::Normal;
}

Label label_window(const LabelIndex& labels, const std::string& video_id, FrameIndex start,
                   std::size_t frames, VideoSplit split, WindowLabelRule rule) {
  std::vector<Label> per_frame;
  per_frame.reserve(frames);
  const auto& known = labels.frames_of(video_id);
  for (std::size_t i = 0; i < frames; ++i) {
    const FrameIndex f = start + static_cast<FrameIndex>(i);
    auto it = known.find(f);
    if (split == VideoSplit::Train) {
      if (it != known.end() && it->second == Label::Anomalous) {
        throw ValidationError("anomalous label in training video '" + video_id + "' at frame " +
                              std::to_string(f));
      }
      per_frame.push_back(Label::Normal);
    } else {
      if (it == known.end()) {
        throw ValidationError("validation frame " + std::to_string(f) + " of '" + video_id +
                              "' has no label");
      }
      per_frame.push_back(it->second);
    }
  }
  return label_window(per_frame, rule);
}

namespace {

Split split_for(VideoSplit video_split, Label label) {
  if (video_split == VideoSplit::Train) return Split::Train;
  return label == Label::Anomalous ? Split::ValidationAnomalous : Split::ValidationNormal;
}

Point2 anchor_of_first_frame(const CoordTensor& coords, const HipIndices& hips) {
  if (coords.nodes() == 1) return coords.point(0, 0);
  if (hips.left >= coords.nodes() || hips.right >= coords.nodes()) {
    throw std::invalid_argument("keypoint layout has no configured hip indices");
  }
  const auto l = coords.point(0, hips.left);
  const auto r = coords.point(0, hips.right);
  return {(l.x + r.x) / 2.0, (l.y + r.y) / 2.0};
}

// Shared windowing for per-person features: `fill` writes one frame of a
// window from one detection.
template <typename Fill>
std::vector<FeatureWindow> build_person_windows(const Tracklet& tracklet,
                                                const WindowingConfig& cfg,
                                                const LabelIndex& labels, VideoSplit split,
                                                CenterPolicy center, std::size_t nodes,
                                                Fill&& fill) {
  cfg.validate();
  std::vector<FeatureWindow> out;
  const auto dets = tracklet.detections();
  for (const auto& run : contiguous_runs(tracklet)) {
    const auto count = window_count(run.length(), cfg.frames, cfg.stride);
    for (std::size_t w = 0; w < count; ++w) {
      const std::size_t first = run.begin + w * cfg.stride;
      CoordTensor coords(cfg.frames, nodes);
      for (std::size_t t = 0; t < cfg.frames; ++t) fill(coords, t, dets[first + t]);
      const FrameIndex start = dets[first].frame_index();
      const Label label = label_window(labels, tracklet.video_id(), start, cfg.frames, split,
                                       cfg.label_rule);
      out.push_back(FeatureWindow::dense(center_window(coords, cfg, center), tracklet.video_id(),
                                         start, {tracklet.track_id()}, label,
                                         split_for(split, label)));
    }
  }
  return out;
}

}  // namespace

CoordTensor center_window(const CoordTensor& coords, const WindowingConfig& cfg,
                          CenterPolicy policy) {
  if (policy == CenterPolicy::None || coords.frames() == 0) return coords;
  const auto anchor = anchor_of_first_frame(coords, cfg.hips);
  const auto target = cfg.frame_center();
  const double dx = target.x - anchor.x;
  const double dy = target.y - anchor.y;
  CoordTensor out = coords;
  auto values = out.values();
  for (std::size_t i = 0; i < values.size(); i += 2) {
    values[i] += dx;
    values[i + 1] += dy;
  }
  return out;
}

CoordTensor center_social_window(const CoordTensor& coords, std::span<const std::uint8_t> mask,
                                 const WindowingConfig& cfg, CenterPolicy policy) {
  if (policy == CenterPolicy::None) return coords;
  for (std::size_t t = 0; t < coords.frames(); ++t) {
    double sx = 0.0, sy = 0.0;
    std::size_t n = 0;
    for (std::size_t j = 0; j < coords.nodes(); ++j) {
      if (!mask[t * coords.nodes() + j]) continue;
      sx += coords.at(t, j, 0);
      sy += coords.at(t, j, 1);
      ++n;
    }
    if (n == 0) continue;
    const auto target = cfg.frame_center();
    const double dx = target.x - sx / static_cast<double>(n);
    const double dy = target.y - sy / static_cast<double>(n);
    CoordTensor out = coords;
    for (std::size_t u = 0; u < out.frames(); ++u) {
      for (std::size_t j = 0; j < out.nodes(); ++j) {
        if (!mask[u * out.nodes() + j]) continue;
        out.at(u, j, 0) += dx;
        out.at(u, j, 1) += dy;
      }
    }
    return out;
  }
  return coords;
}

std::vector<FeatureWindow> build_pose_windows(const Tracklet& tracklet, const WindowingConfig& cfg,
                                              const LabelIndex& labels, VideoSplit split,
                                              CenterPolicy center) {
  if (!tracklet.empty() && tracklet.detections().front().keypoint_count() != cfg.keypoints) {
    throw std::invalid_argument("tracklet keypoint count does not match configured k");
  }
  return build_person_windows(tracklet, cfg, labels, split, center, cfg.keypoints,
                              [](CoordTensor& coords, std::size_t t, const PoseDetection& d) {
                                const auto kps = d.keypoints();
                                for (std::size_t j = 0; j < kps.size(); ++j) {
                                  coords.set_point(t, j, kps[j].position());
                                }
                              });
}

std::vector<FeatureWindow> build_trajectory_windows(const Tracklet& tracklet,
                                                    const WindowingConfig& cfg,
                                                    const LabelIndex& labels, VideoSplit split,
                                                    CenterPolicy center) {
  return build_person_windows(
      tracklet, cfg, labels, split, center, 1,
      [&cfg](CoordTensor& coords, std::size_t t, const PoseDetection& d) {
        coords.set_point(t, 0, person_center(d, cfg.hips));
      });
}

WindowSet build_social_windows(const DatasetBundle& bundle, CenterPolicy center,
                               SocialOptions options) {
  bundle.config.validate();
  WindowSet set;
  set.type = FeatureType::SocialTrajectory;
  const LabelIndex labels(bundle.labels);
  const std::size_t T = bundle.config.frames;
  const std::size_t N = bundle.config.social_nodes;

  // video -> track -> frame -> center
  std::map<std::string, std::map<TrackId, std::map<FrameIndex, Point2>>> scenes;
  for (const auto& t : bundle.tracklets) {
    auto& track = scenes[t.video_id()][t.track_id()];
    for (const auto& d : t.detections()) {
      track.emplace(d.frame_index(), person_center(d, bundle.config.hips));
    }
  }
  std::set<std::string> videos;
  for (const auto& [v, _] : scenes) videos.insert(v);
  for (const auto& l : bundle.labels) {
    if (bundle.videos.contains(l.video_id)) videos.insert(l.video_id);
  }

  for (const auto& video : videos) {
    const auto split = bundle.split_of(video);
    const auto cfg = bundle.config_for(video);
    const auto& tracks = scenes[video];

    FrameIndex first = std::numeric_limits<FrameIndex>::max();
    FrameIndex last = std::numeric_limits<FrameIndex>::min();
    for (const auto& [id, frames] : tracks) {
      first = std::min(first, frames.begin()->first);
      last = std::max(last, frames.rbegin()->first);
    }
    if (const auto& lf = labels.frames_of(video); !lf.empty()) {
      first = std::min(first, lf.begin()->first);
      last = std::max(last, lf.rbegin()->first);
    }
    if (first > last) continue;
    const auto span_frames = static_cast<std::size_t>(last - first + 1);
    const auto count = window_count(span_frames, T, bundle.config.stride);

    for (std::size_t w = 0; w < count; ++w) {
      const FrameIndex start = first + static_cast<FrameIndex>(w * bundle.config.stride);
      const FrameIndex stop = start + static_cast<FrameIndex>(T);
      std::vector<TrackId> present;
      for (const auto& [id, frames] : tracks) {
        auto it = frames.lower_bound(start);
        if (it != frames.end() && it->first < stop) present.push_back(id);
      }
      if (present.size() > N) {
        const std::string where = "social window (" + video + ", start " +
                                  std::to_string(start) + ") has " +
                                  std::to_string(present.size()) + " tracks, capacity " +
                                  std::to_string(N);
        if (!options.truncate) throw std::length_error(where);
        set.warnings.push_back(where + "; truncated to lowest track ids");
        present.resize(N);
      }
      CoordTensor coords(T, N);
      std::vector<std::uint8_t> mask(T * N, 0);
      for (std::size_t slot = 0; slot < present.size(); ++slot) {
        const auto& frames = tracks.at(present[slot]);
        for (auto it = frames.lower_bound(start); it != frames.end() && it->first < stop; ++it) {
          const auto t = static_cast<std::size_t>(it->first - start);
          coords.set_point(t, slot, it->second);
          mask[t * N + slot] = 1;
        }
      }
      const Label label = label_window(labels, video, start, T, split, cfg.label_rule);
      auto centered = center_social_window(coords, mask, cfg, center);
      set.windows.emplace_back(std::move(centered), std::move(mask), video, start,
                               std::move(present), label, split_for(split, label));
    }
  }
  sort_canonical(set.windows);
  return set;
}

WindowSet build_windows(const DatasetBundle& bundle, FeatureType type, CenterPolicy center,
                        SocialOptions options) {
  if (type == FeatureType::SocialTrajectory) return build_social_windows(bundle, center, options);
  bundle.config.validate();
  WindowSet set;
  set.type = type;
  const LabelIndex labels(bundle.labels);
  for (const auto& t : bundle.tracklets) {
    const auto cfg = bundle.config_for(t.video_id());
    const auto split = bundle.split_of(t.video_id());
    auto windows = type == FeatureType::Pose
                       ? build_pose_windows(t, cfg, labels, split, center)
                       : build_trajectory_windows(t, cfg, labels, split, center);
    std::move(windows.begin(), windows.end(), std::back_inserter(set.windows));
  }
  sort_canonical(set.windows);
  return set;
}

void sort_canonical(std::vector<FeatureWindow>& windows) {
  std::stable_sort(windows.begin(), windows.end(),
                   [](const FeatureWindow& a, const FeatureWindow& b) {
                     const auto ta = a.track_ids();
                     const auto tb = b.track_ids();
                     if (a.video_id() != b.video_id()) return a.video_id() < b.video_id();
                     if (!std::equal(ta.begin(), ta.end(), tb.begin(), tb.end())) {
                       return std::lexicographical_compare(ta.begin(), ta.end(), tb.begin(),
                                                           tb.end());
                     }
                     return a.start_frame() < b.start_frame();
                   });
}

std::vector<FeatureWindow> select_split(std::span<const FeatureWindow> windows, Split split) {
  std::vector<FeatureWindow> out;
  for (const auto& w : windows) {
    if (w.split() == split) out.push_back(w);
  }
  return out;
}

// Window file ---------------------------------------------------------------

void write_windows(std::ostream& out, const WindowSet& set) {
  const std::size_t frames = set.windows.empty() ? 0 : set.windows.front().frames();
  const std::size_t nodes = set.windows.empty() ? 0 : set.windows.front().nodes();
  out << "# skeldiff-windows feature=" << short_name(set.type) << " frames=" << frames
      << " nodes=" << nodes << '\n';
  std::string line;
  for (const auto& w : set.windows) {
    if (w.frames() != frames || w.nodes() != nodes) {
      throw std::invalid_argument("window set mixes shapes");
    }
    line.clear();
    line += w.video_id();
    line += '\t';
    line += std::to_string(w.start_frame());
    line += '\t';
    const auto ids = w.track_ids();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i) line += ',';
      line += std::to_string(ids[i]);
    }
    line += '\t';
    line += to_string(w.label());
    line += '\t';
    line += to_string(w.split());
    line += '\t';
    const auto values = w.coords().values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) line += ',';
      line += text::format_double(values[i]);
    }
    line += '\t';
    for (auto m : w.mask()) line += m ? '1' : '0';
    line += '\n';
    out << line;
  }
}

WindowSet parse_windows(std::istream& in) {
  WindowSet set;
  std::string raw;
  if (!std::getline(in, raw)) throw ParseError("empty window file");
  std::size_t frames = 0, nodes = 0;
  {
    const auto header = text::split(text::chomp(raw), ' ');
    if (header.size() != 5 || header[0] != "#" || header[1] != "skeldiff-windows" ||
        !header[2].starts_with("feature=") || !header[3].starts_with("frames=") ||
        !header[4].starts_with("nodes=")) {
      throw ParseError("missing window file header", 1);
    }
    set.type = parse_feature_type(header[2].substr(8));
    frames = static_cast<std::size_t>(text::parse_int(header[3].substr(7)));
    nodes = static_cast<std::size_t>(text::parse_int(header[4].substr(6)));
  }
  std::size_t line_no = 1;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = text::chomp(raw);
    if (line.empty()) continue;
    try {
      const auto f = text::split(line, '\t');
      if (f.size() != 7) throw ParseError("expected 7 tab-separated fields");
      std::vector<TrackId> ids;
      if (!f[2].empty()) {
        for (auto id : text::split(f[2], ',')) ids.push_back(text::parse_int(id));
      }
      const auto parts = text::split(f[5], ',');
      if (parts.size() != frames * nodes * 2) throw ParseError("coordinate count mismatch");
      std::vector<double> values;
      values.reserve(parts.size());
      for (auto p : parts) values.push_back(text::parse_finite_double(p));
      if (f[6].size() != frames * nodes) throw ParseError("mask length mismatch");
      std::vector<std::uint8_t> mask;
      mask.reserve(f[6].size());
      for (char c : f[6]) {
        if (c != '0' && c != '1') throw ParseError("mask must be 0/1");
        mask.push_back(c == '1' ? 1 : 0);
      }
      set.windows.emplace_back(CoordTensor(frames, nodes, std::move(values)), std::move(mask),
                               std::string(f[0]), text::parse_int(f[1]), std::move(ids),
                               parse_label(f[3]), parse_split(f[4]));
    } catch (const ParseError& e) {
      if (e.line() != 0) throw;
      throw ParseError(e.what(), line_no);
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return set;
}

}  // namespace skeldiff
