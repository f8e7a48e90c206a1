#include "skeldiff/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "skeldiff/text.hpp"

namespace skeldiff {

namespace {

using text::chomp;
using text::split;

bool skippable(std::string_view line) {
  return line.empty() || line.front() == '#';
}

// Rethrows a field-level ParseError with the line number attached.
template <typename F>
auto at_line(std::size_t line_no, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ParseError& e) {
    if (e.line() != 0) throw;
    throw ParseError(e.what(), line_no);
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what(), line_no);
  }
}

std::string require_id(std::string_view field, const char* what) {
  if (field.empty()) throw ParseError(std::string("empty ") + what);
  return std::string(field);
}

std::string format_vector(std::span<const double> values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += text::format_double(values[i]);
  }
  return out;
}

std::vector<double> parse_vector(std::string_view field) {
  std::vector<double> out;
  if (field.empty()) return out;
  for (auto part : split(field, ',')) out.push_back(text::parse_finite_double(part));
  return out;
}

const std::map<FrameIndex, Label>& empty_frames() {
  static const std::map<FrameIndex, Label> empty;
  return empty;
}

}  // namespace

// ---------------------------------------------------------------------------

WindowingConfig DatasetBundle::config_for(const std::string& video_id) const {
  WindowingConfig cfg = config;
  if (auto it = videos.find(video_id); it != videos.end()) {
    cfg.frame_width = it->second.width;
    cfg.frame_height = it->second.height;
  }
  return cfg;
}

VideoSplit DatasetBundle::split_of(const std::string& video_id) const {
  auto it = videos.find(video_id);
  if (it == videos.end()) throw ValidationError("video '" + video_id + "' missing from manifest");
  return it->second.split;
}

LabelIndex::LabelIndex(std::span<const FrameLabel> labels) {
  for (const auto& l : labels) {
    if (!by_video_[l.video_id].emplace(l.frame_index, l.label).second) {
      throw ParseError("duplicate label for (" + l.video_id + ", " +
                       std::to_string(l.frame_index) + ")");
    }
    ++count_;
  }
}

std::optional<Label> LabelIndex::find(const std::string& video_id, FrameIndex frame) const {
  auto v = by_video_.find(video_id);
  if (v == by_video_.end()) return std::nullopt;
  auto f = v->second.find(frame);
  if (f == v->second.end()) return std::nullopt;
  return f->second;
}

const std::map<FrameIndex, Label>& LabelIndex::frames_of(const std::string& video_id) const {
  auto v = by_video_.find(video_id);
  return v == by_video_.end() ? empty_frames() : v->second;
}

// Tracklets -----------------------------------------------------------------

std::vector<Tracklet> parse_tracklets(std::istream& in, std::size_t keypoints) {
  if (keypoints == 0) throw std::invalid_argument("keypoint count must be positive");
  std::map<std::pair<std::string, TrackId>, std::vector<PoseDetection>> groups;
  std::set<std::tuple<std::string, TrackId, FrameIndex>> seen;

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = chomp(raw);
    if (skippable(line)) continue;
    at_line(line_no, [&] {
      const auto fields = split(line, '\t');
      if (fields.size() != 4) {
        throw ParseError("expected 4 tab-separated fields, got " + std::to_string(fields.size()));
      }
      auto video = require_id(fields[0], "video_id");
      const auto frame = text::parse_int(fields[1]);
      const auto track = text::parse_int(fields[2]);
      const auto triples = split(fields[3], ';');
      if (triples.size() != keypoints) {
        throw ParseError("expected " + std::to_string(keypoints) + " keypoints, got " +
                         std::to_string(triples.size()));
      }
      std::vector<Keypoint> kps;
      kps.reserve(keypoints);
      for (auto triple : triples) {
        const auto xyc = split(triple, ',');
        if (xyc.size() != 3) throw ParseError("keypoint must be x,y,c");
        kps.emplace_back(text::parse_finite_double(xyc[0]), text::parse_finite_double(xyc[1]),
                         text::parse_finite_double(xyc[2]));
      }
      if (!seen.emplace(video, track, frame).second) {
        throw ParseError("duplicate detection (" + video + ", track " + std::to_string(track) +
                         ", frame " + std::to_string(frame) + ")");
      }
      groups[{video, track}].emplace_back(video, frame, track, std::move(kps));
      return 0;
    });
  }

  std::vector<Tracklet> out;
  out.reserve(groups.size());
  for (auto& [key, dets] : groups) {
    std::sort(dets.begin(), dets.end(), [](const PoseDetection& a, const PoseDetection& b) {
      return a.frame_index() < b.frame_index();
    });
    out.emplace_back(key.first, key.second, std::move(dets));
  }
  return out;
}

void write_tracklets(std::ostream& out, std::span<const Tracklet> tracklets) {
  std::string line;
  for (const auto& t : tracklets) {
    for (const auto& d : t.detections()) {
      line.clear();
      line += d.video_id();
      line += '\t';
      line += std::to_string(d.frame_index());
      line += '\t';
      line += std::to_string(d.track_id());
      line += '\t';
      bool first = true;
      for (const auto& kp : d.keypoints()) {
        if (!first) line += ';';
        first = false;
        line += text::format_double(kp.x());
        line += ',';
        line += text::format_double(kp.y());
        line += ',';
        line += text::format_double(kp.confidence());
      }
      line += '\n';
      out << line;
    }
  }
}

// Labels --------------------------------------------------------------------

std::vector<FrameLabel> parse_labels(std::istream& in) {
  std::vector<FrameLabel> out;
  std::set<std::pair<std::string, FrameIndex>> seen;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = chomp(raw);
    if (skippable(line)) continue;
    if (line == "video_id,frame_index,label") continue;
    at_line(line_no, [&] {
      const auto fields = split(line, ',');
      if (fields.size() != 3) throw ParseError("expected video_id,frame_index,label");
      FrameLabel label;
      label.video_id = require_id(fields[0], "video_id");
      label.frame_index = text::parse_int(fields[1]);
      if (label.frame_index < 0) throw ParseError("negative frame index");
      if (fields[2] == "0") {
        label.label = Label::Normal;
      } else if (fields[2] == "1") {
        label.label = Label::Anomalous;
      } else {
        throw ParseError("label must be 0 or 1, got '" + std::string(fields[2]) + "'");
      }
      if (!seen.emplace(label.video_id, label.frame_index).second) {
        throw ParseError("duplicate label for (" + label.video_id + ", " +
                         std::to_string(label.frame_index) + ")");
      }
      out.push_back(std::move(label));
      return 0;
    });
  }
  std::sort(out.begin(), out.end(), [](const FrameLabel& a, const FrameLabel& b) {
    return std::tie(a.video_id, a.frame_index) < std::tie(b.video_id, b.frame_index);
  });
  return out;
}

void write_labels(std::ostream& out, std::span<const FrameLabel> labels) {
  for (const auto& l : labels) {
    out << l.video_id << ',' << l.frame_index << ',' << (l.label == Label::Anomalous ? 1 : 0)
        << '\n';
  }
}

// Embeddings ----------------------------------------------------------------

EmbeddingSet parse_embeddings(std::istream& in) {
  EmbeddingSet set;
  bool have_header = false;
  std::size_t dim = 0;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = chomp(raw);
    if (skippable(line)) continue;
    at_line(line_no, [&] {
      if (!have_header) {
        const auto parts = split(line, ' ');
        if (parts.size() != 2 || !parts[0].starts_with("dim=") || !parts[1].starts_with("mu=")) {
          throw ParseError("missing prior header 'dim=<d> mu=<v1,...,vd>'");
        }
        const auto d = text::parse_int(parts[0].substr(4));
        if (d <= 0) throw ParseError("embedding dimension must be positive");
        dim = static_cast<std::size_t>(d);
        set.prior.mu_normal = parse_vector(parts[1].substr(3));
        if (set.prior.mu_normal.size() != dim) {
          throw ParseError("prior mean has " + std::to_string(set.prior.mu_normal.size()) +
                           " values, expected " + std::to_string(dim));
        }
        have_header = true;
        return 0;
      }
      const auto fields = split(line, '\t');
      if (fields.size() != 2 && fields.size() != 3) {
        throw ParseError("expected split<TAB>vector[<TAB>source]");
      }
      EmbeddingRecord rec;
      rec.split = parse_split(fields[0]);
      rec.vector = parse_vector(fields[1]);
      if (rec.vector.size() != dim) {
        throw ParseError("embedding has " + std::to_string(rec.vector.size()) +
                         " values, expected " + std::to_string(dim));
      }
      if (fields.size() == 3) rec.source_window = std::string(fields[2]);
      set.records.push_back(std::move(rec));
      return 0;
    });
  }
  if (!have_header) throw ParseError("missing prior header 'dim=<d> mu=<v1,...,vd>'");
  return set;
}

void write_embeddings(std::ostream& out, const EmbeddingSet& set) {
  out << "dim=" << set.prior.mu_normal.size() << " mu=" << format_vector(set.prior.mu_normal)
      << '\n';
  for (const auto& r : set.records) {
    if (r.vector.size() != set.prior.mu_normal.size()) {
      throw std::invalid_argument("embedding dimension mismatch");
    }
    out << to_string(r.split) << '\t' << format_vector(r.vector);
    if (r.source_window) out << '\t' << *r.source_window;
    out << '\n';
  }
}

// Scores --------------------------------------------------------------------

std::vector<ScoredFrame> parse_scores(std::istream& in, ScorePolarity polarity,
                                      const LabelIndex& labels) {
  std::vector<ScoredFrame> out;
  std::set<std::pair<std::string, FrameIndex>> seen;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = chomp(raw);
    if (skippable(line)) continue;
    if (line == "video_id,frame_index,score") continue;
    at_line(line_no, [&] {
      const auto fields = split(line, ',');
      if (fields.size() != 3) throw ParseError("expected video_id,frame_index,score");
      ScoredFrame s;
      s.video_id = require_id(fields[0], "video_id");
      s.frame_index = text::parse_int(fields[1]);
      const double score = text::parse_finite_double(fields[2]);
      s.score = polarity == ScorePolarity::NormalityScore ? -score : score;
      const auto label = labels.find(s.video_id, s.frame_index);
      if (!label) {
        throw ParseError("score for unlabeled frame (" + s.video_id + ", " +
                         std::to_string(s.frame_index) + ")");
      }
      s.label = *label;
      if (!seen.emplace(s.video_id, s.frame_index).second) {
        throw ParseError("duplicate score for (" + s.video_id + ", " +
                         std::to_string(s.frame_index) + ")");
      }
      out.push_back(std::move(s));
      return 0;
    });
  }
  std::sort(out.begin(), out.end(), [](const ScoredFrame& a, const ScoredFrame& b) {
    return std::tie(a.video_id, a.frame_index) < std::tie(b.video_id, b.frame_index);
  });
  return out;
}

void write_scores(std::ostream& out, std::span<const ScoredFrame> scores) {
  for (const auto& s : scores) {
    out << s.video_id << ',' << s.frame_index << ',' << text::format_double(s.score) << '\n';
  }
}

// Manifest ------------------------------------------------------------------

Manifest parse_manifest(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("manifest must be a JSON object");
  Manifest manifest;
  for (const auto& [video, entry] : doc.items()) {
    if (!entry.is_object() || !entry.contains("split") || !entry.contains("width") ||
        !entry.contains("height")) {
      throw ParseError("manifest entry '" + video + "' needs split, width and height");
    }
    if (!entry["split"].is_string() || !entry["width"].is_number() ||
        !entry["height"].is_number()) {
      throw ParseError("manifest entry '" + video + "' has mistyped fields");
    }
    VideoInfo info;
    info.split = parse_video_split(entry["split"].get<std::string>());
    info.width = entry["width"].get<double>();
    info.height = entry["height"].get<double>();
    if (!(info.width > 0.0) || !(info.height > 0.0)) {
      throw ParseError("manifest entry '" + video + "' needs positive frame size");
    }
    manifest.emplace(video, info);
  }
  return manifest;
}

std::string manifest_to_json(const Manifest& manifest) {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& [video, info] : manifest) {
    doc[video] = {{"split", std::string(to_string(info.split))},
                  {"width", info.width},
                  {"height", info.height}};
  }
  return doc.dump(2) + "\n";
}

// Bundles -------------------------------------------------------------------

BundlePaths BundlePaths::in_directory(const std::filesystem::path& dir) {
  return {dir / "tracklets.tsv", dir / "labels.csv", dir / "manifest.json"};
}

DatasetBundle load_bundle(const BundlePaths& paths, const WindowingConfig& config) {
  config.validate();
  DatasetBundle bundle;
  bundle.config = config;
  auto open = [](const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    return in;
  };
  {
    auto in = open(paths.tracklets);
    bundle.tracklets = parse_tracklets(in, config.keypoints);
  }
  if (!paths.labels.empty() && std::filesystem::exists(paths.labels)) {
    auto in = open(paths.labels);
    bundle.labels = parse_labels(in);
  }
  {
    auto in = open(paths.manifest);
    bundle.videos = parse_manifest(in);
  }
  return bundle;
}

void save_bundle(const DatasetBundle& bundle, const std::filesystem::path& dir) {
  const auto paths = BundlePaths::in_directory(dir);
  std::ostringstream tracks;
  write_tracklets(tracks, bundle.tracklets);
  text::write_file_atomic(paths.tracklets, tracks.str());
  std::ostringstream labels;
  write_labels(labels, bundle.labels);
  text::write_file_atomic(paths.labels, labels.str());
  text::write_file_atomic(paths.manifest, manifest_to_json(bundle.videos));
}

ValidationReport inspect_bundle(const DatasetBundle& bundle) {
  ValidationReport report;
  try {
    bundle.config.validate();
  } catch (const std::invalid_argument& e) {
    report.fatal.push_back(std::string("invalid windowing config: ") + e.what());
    return report;
  }
  const auto T = static_cast<FrameIndex>(bundle.config.frames);

  std::map<std::string, VideoSummary> summaries;
  std::map<std::string, std::set<FrameIndex>> detection_frames;
  std::map<std::string, std::set<FrameIndex>> eligible;

  for (const auto& t : bundle.tracklets) {
    auto it = bundle.videos.find(t.video_id());
    if (it == bundle.videos.end()) {
      report.fatal.push_back("tracklet video '" + t.video_id() + "' missing from manifest");
      continue;
    }
    auto& s = summaries[t.video_id()];
    s.video_id = t.video_id();
    s.split = it->second.split;
    s.tracks += 1;
    s.detections += t.size();
    const auto dets = t.detections();
    if (!dets.empty() && dets.front().keypoint_count() != bundle.config.keypoints) {
      report.fatal.push_back("tracklet (" + t.video_id() + ", " + std::to_string(t.track_id()) +
                             ") has " + std::to_string(dets.front().keypoint_count()) +
                             " keypoints, expected " + std::to_string(bundle.config.keypoints));
    }
    auto& frames = detection_frames[t.video_id()];
    std::size_t run_start = 0;
    for (std::size_t i = 0; i <= dets.size(); ++i) {
      const bool breaks = i == dets.size() ||
                          (i > 0 && dets[i].frame_index() != dets[i - 1].frame_index() + 1);
      if (breaks && i > run_start) {
        if (static_cast<FrameIndex>(i - run_start) >= T) {
          for (std::size_t j = run_start; j < i; ++j) {
            eligible[t.video_id()].insert(dets[j].frame_index());
          }
        }
        run_start = i;
      }
      if (i < dets.size()) frames.insert(dets[i].frame_index());
    }
  }

  for (const auto& [video, info] : bundle.videos) {
    auto& s = summaries[video];
    s.video_id = video;
    s.split = info.split;
  }

  const LabelIndex index(bundle.labels);
  std::set<std::string> warned;
  for (const auto& l : bundle.labels) {
    auto it = bundle.videos.find(l.video_id);
    if (it == bundle.videos.end()) {
      if (warned.insert(l.video_id).second) {
        report.warnings.push_back("labels for video '" + l.video_id + "' not in manifest");
      }
      continue;
    }
    auto& s = summaries[l.video_id];
    s.labeled_frames += 1;
    if (l.label == Label::Anomalous) {
      s.anomalous_frames += 1;
      if (it->second.split == VideoSplit::Train) {
        report.fatal.push_back("anomalous label in training video '" + l.video_id +
                               "' at frame " + std::to_string(l.frame_index));
      }
    }
  }

  for (auto& [video, s] : summaries) {
    const auto& frames = detection_frames[video];
    const auto& labeled = index.frames_of(video);
    if (!frames.empty()) {
      s.first_frame = *frames.begin();
      s.last_frame = *frames.rbegin();
    }
    if (!labeled.empty()) {
      s.first_frame = frames.empty() ? labeled.begin()->first
                                     : std::min(s.first_frame, labeled.begin()->first);
      s.last_frame = std::max(s.last_frame, labeled.rbegin()->first);
    }
    s.window_eligible_frames = eligible[video].size();
    if (s.split == VideoSplit::Validation) {
      for (auto f : frames) {
        if (!labeled.contains(f)) ++s.unlabeled_frames;
      }
      report.label_gaps += s.unlabeled_frames;
      report.eligible_frames_val += s.window_eligible_frames;
    } else {
      report.eligible_frames_train += s.window_eligible_frames;
    }
    report.videos.push_back(s);
  }
  if (report.label_gaps > 0) {
    report.warnings.push_back(std::to_string(report.label_gaps) +
                              " validation frames with detections have no label");
  }
  return report;
}

ValidationReport validate_bundle(const DatasetBundle& bundle) {
  auto report = inspect_bundle(bundle);
  if (!report.ok()) throw ValidationError(report.fatal.front());
  return report;
}

std::string ValidationReport::to_json() const {
  nlohmann::json doc;
  doc["ok"] = ok();
  doc["fatal"] = fatal;
  doc["warnings"] = warnings;
  doc["label_gaps"] = label_gaps;
  doc["eligible_frames"] = {{"train", eligible_frames_train}, {"val", eligible_frames_val}};
  auto videos_json = nlohmann::json::array();
  for (const auto& v : videos) {
    videos_json.push_back({{"video_id", v.video_id},
                           {"split", std::string(to_string(v.split))},
                           {"first_frame", v.first_frame},
                           {"last_frame", v.last_frame},
                           {"detections", v.detections},
                           {"tracks", v.tracks},
                           {"labeled_frames", v.labeled_frames},
                           {"anomalous_frames", v.anomalous_frames},
                           {"window_eligible_frames", v.window_eligible_frames},
                           {"unlabeled_frames", v.unlabeled_frames}});
  }
  doc["videos"] = std::move(videos_json);
  return doc.dump(2) + "\n";
}

}  // namespace skeldiff
