#include "skeldiff_cli/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "skeldiff/skeldiff.hpp"

namespace skeldiff::cli {

namespace fs = std::filesystem;

namespace {

/// Bad flag values or flag combinations detected after CLI11 parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;

  // inputs
  std::string data_dir;
  std::string tracklets;
  std::string labels;
  std::string manifest;
  std::string windows;
  std::string scores;
  std::string embeddings;
  std::string out = ".";

  // windowing
  std::optional<std::size_t> frames;
  std::optional<std::size_t> stride;
  std::optional<std::size_t> nodes;
  std::optional<std::size_t> keypoints;
  std::string label_rule = "any";
  bool no_center = false;
  bool truncate_social = false;

  std::optional<std::string> feature;
  std::string features = "pose,traj";
  std::string binning = "auto";
  std::string polarity = "anomaly";
  bool per_video_average = false;
  bool drop_uncovered = false;
  std::uint64_t seed = 0;

  // synth
  std::size_t n_videos = 8;
  std::size_t train_videos = 4;
  std::size_t frames_per_video = 240;
  std::size_t persons = 3;
  std::vector<std::string> anomalies{"trajectory_shift:50"};
  double anomaly_fraction = 0.35;
  double max_speed = 0.5;
  double jitter = 1.5;
  std::optional<std::string> oracle;
};

std::shared_ptr<spdlog::logger> logger() {
  if (auto l = spdlog::get("skeldiff")) return l;
  auto l = spdlog::stderr_logger_mt("skeldiff");
  l->set_pattern("[%l] %v");
  l->set_level(spdlog::level::warn);
  if (const char* env = std::getenv("SKELDIFF_LOG")) l->set_level(spdlog::level::from_str(env));
  return l;
}

/// Files produced by one command. Nothing touches the output directory until
/// the command has computed every result.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}
  void add(const std::string& name, std::string content) {
    files_.emplace_back(name, std::move(content));
  }
  void commit() const {
    for (const auto& [name, content] : files_) {
      text::write_file_atomic(dir_ / name, content);
      logger()->info("wrote {}", (dir_ / name).string());
    }
  }

 private:
  fs::path dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

std::string stream_to_string(const std::function<void(std::ostream&)>& write) {
  std::ostringstream os;
  write(os);
  return os.str();
}

WindowingConfig windowing(const RunConfig& rc) {
  WindowingConfig cfg;
  if (rc.frames) cfg.frames = *rc.frames;
  if (rc.stride) cfg.stride = *rc.stride;
  if (rc.nodes) cfg.social_nodes = *rc.nodes;
  if (rc.keypoints) cfg.keypoints = *rc.keypoints;
  cfg.label_rule = rc.label_rule == "majority" ? WindowLabelRule::Majority
                                                : WindowLabelRule::AnyAnomalous;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

CenterPolicy center_for(const RunConfig& rc, FeatureType type) {
  return rc.no_center ? CenterPolicy::None : default_center_policy(type);
}

BundlePaths bundle_paths(const RunConfig& rc) {
  BundlePaths paths;
  if (!rc.data_dir.empty()) paths = BundlePaths::in_directory(rc.data_dir);
  if (!rc.tracklets.empty()) paths.tracklets = rc.tracklets;
  if (!rc.labels.empty()) paths.labels = rc.labels;
  if (!rc.manifest.empty()) paths.manifest = rc.manifest;
  return paths;
}

DatasetBundle load_input(const RunConfig& rc) {
  const auto paths = bundle_paths(rc);
  if (paths.tracklets.empty() || paths.manifest.empty()) {
    throw UsageError("needs --data, or --tracklets together with --manifest");
  }
  for (const auto& p : {paths.tracklets, paths.manifest}) {
    if (!fs::exists(p)) throw UsageError("input file not found: " + p.string());
  }
  auto bundle = load_bundle(paths, windowing(rc));
  logger()->info("loaded {} tracklets, {} labels, {} videos", bundle.tracklets.size(),
                 bundle.labels.size(), bundle.videos.size());
  return bundle;
}

FeatureType feature_or(const RunConfig& rc, FeatureType fallback) {
  return rc.feature ? parse_feature_type(*rc.feature) : fallback;
}

/// Windows either from a window file or built from the bundle.
WindowSet input_windows(const RunConfig& rc) {
  if (!rc.windows.empty()) {
    std::ifstream in(rc.windows);
    if (!in) throw UsageError("cannot open " + rc.windows);
    auto set = parse_windows(in);
    if (rc.feature && parse_feature_type(*rc.feature) != set.type) {
      throw UsageError("--feature " + *rc.feature + " does not match the window file (" +
                       std::string(short_name(set.type)) + ")");
    }
    return set;
  }
  const auto bundle = load_input(rc);
  const auto type = feature_or(rc, FeatureType::Pose);
  return build_windows(bundle, type, center_for(rc, type), {rc.truncate_social});
}

Binning binning_of(const RunConfig& rc) {
  try {
    return parse_binning(rc.binning);
  } catch (const std::exception& e) {
    throw UsageError(std::string("--binning: ") + e.what());
  }
}

void log_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) logger()->warn("{}", w);
}

// Commands ------------------------------------------------------------------

int cmd_validate(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  const auto bundle = load_input(rc);
  const auto report = inspect_bundle(bundle);
  Outputs files(rc.out);
  files.add("validation.json", report.to_json());
  files.commit();
  log_warnings(report.warnings);
  out << "videos " << report.videos.size() << ", eligible frames train "
      << report.eligible_frames_train << " val " << report.eligible_frames_val
      << ", label gaps " << report.label_gaps << "\n";
  if (!report.ok()) {
    nlohmann::json e{{"error", "validation"}, {"command", "validate"}, {"fatal", report.fatal}};
    err << e.dump() << "\n";
    return kBadInput;
  }
  return kOk;
}

int cmd_windows(const RunConfig& rc, std::ostream& out) {
  const auto bundle = load_input(rc);
  validate_bundle(bundle);
  std::vector<FeatureType> types{FeatureType::Pose, FeatureType::AbsoluteTrajectory,
                                 FeatureType::SocialTrajectory};
  if (rc.feature) types = {parse_feature_type(*rc.feature)};
  Outputs files(rc.out);
  for (auto type : types) {
    const auto set = build_windows(bundle, type, center_for(rc, type), {rc.truncate_social});
    log_warnings(set.warnings);
    files.add("windows_" + std::string(short_name(type)) + ".tsv",
              stream_to_string([&](std::ostream& os) { write_windows(os, set); }));
    out << short_name(type) << ": " << set.windows.size() << " windows\n";
  }
  files.commit();
  return kOk;
}

int cmd_sdom(const RunConfig& rc, std::ostream& out) {
  const auto set = input_windows(rc);
  log_warnings(set.warnings);
  const auto report = sdom_report(set.windows, set.type);
  Outputs files(rc.out);
  files.add("sdom_" + std::string(short_name(set.type)) + ".json", sdom_report_to_json(report));
  files.commit();
  out << short_name(set.type) << ": delta_n " << text::format_double(report.delta_n())
      << " delta_a " << text::format_double(report.delta_a()) << " sdom "
      << text::format_double(report.sdom()) << "\n";
  return kOk;
}

int cmd_dist_hist(const RunConfig& rc, std::ostream& out) {
  const auto binning = binning_of(rc);
  std::vector<DistanceSeries> series;
  std::string tag;
  if (!rc.embeddings.empty()) {
    std::ifstream in(rc.embeddings);
    if (!in) throw UsageError("cannot open " + rc.embeddings);
    const auto set = parse_embeddings(in);
    tag = "latent";
    for (auto& [split, s] : latent_distances(set.records, set.prior)) {
      if (!s.values.empty()) series.push_back(std::move(s));
    }
  } else {
    const auto set = input_windows(rc);
    log_warnings(set.warnings);
    tag = std::string(short_name(set.type));
    const auto train = select_split(set.windows, Split::Train);
    if (train.empty()) throw ValidationError("no training-normal windows to take the mean of");
    const auto mu = mean_tensor(train);
    for (auto split : {Split::Train, Split::ValidationNormal, Split::ValidationAnomalous}) {
      const auto windows = split == Split::Train ? train : select_split(set.windows, split);
      if (windows.empty()) {
        logger()->warn("split {} has no windows", to_string(split));
        continue;
      }
      series.push_back(distances_to_mean(windows, mu, tag));
    }
  }
  if (series.empty()) throw ValidationError("no samples to summarise");

  std::vector<Histogram> histograms;
  std::map<Split, BoxStats> boxes;
  for (const auto& s : series) {
    histograms.push_back(histogram(s, binning));
    boxes.emplace(s.split, box_stats(s));
  }
  Outputs files(rc.out);
  files.add("dist_" + tag + ".csv", distance_series_to_csv(series));
  files.add("hist_" + tag + ".csv", histograms_to_csv(histograms));
  files.add("box_" + tag + ".json", box_stats_to_json(boxes, tag));
  files.commit();
  for (const auto& [split, b] : boxes) {
    out << tag << " " << to_string(split) << ": median " << text::format_double(b.median())
        << " iqr " << text::format_double(b.q3() - b.q1()) << "\n";
  }
  return kOk;
}

int cmd_metrics(const RunConfig& rc, std::ostream& out) {
  const auto paths = bundle_paths(rc);
  if (paths.labels.empty() || !fs::exists(paths.labels)) {
    throw UsageError("metrics needs frame labels (--labels or --data)");
  }
  if (rc.scores.empty()) throw UsageError("metrics needs --scores");
  std::vector<FrameLabel> labels;
  {
    std::ifstream in(paths.labels);
    labels = parse_labels(in);
  }
  // With a manifest, only validation videos are evaluated.
  if (!paths.manifest.empty() && fs::exists(paths.manifest)) {
    std::ifstream in(paths.manifest);
    const auto manifest = parse_manifest(in);
    std::erase_if(labels, [&](const FrameLabel& l) {
      auto it = manifest.find(l.video_id);
      return it != manifest.end() && it->second.split == VideoSplit::Train;
    });
  }
  const auto polarity =
      rc.polarity == "normality" ? ScorePolarity::NormalityScore : ScorePolarity::AnomalyScore;
  std::vector<ScoredFrame> scored;
  {
    std::ifstream in(rc.scores);
    scored = parse_scores(in, polarity, LabelIndex(labels));
  }
  std::vector<WindowScore> single_frames;
  single_frames.reserve(scored.size());
  for (const auto& s : scored) single_frames.push_back({s.video_id, s.frame_index, 1, s.score});
  FrameScoreOptions options;
  options.uncovered = rc.drop_uncovered ? UncoveredPolicy::Drop : UncoveredPolicy::LeastAnomalous;
  const auto frames = windows_to_frame_scores(single_frames, labels, options);
  if (frames.uncovered > 0) {
    logger()->warn("{} labeled frames have no score ({})", frames.uncovered,
                   rc.drop_uncovered ? "dropped" : "scored as least anomalous");
  }

  auto report = evaluate(frames.frames,
                         rc.per_video_average ? Averaging::PerVideo : Averaging::Concatenate);
  report.uncovered_frames = frames.uncovered;
  Outputs files(rc.out);
  files.add("metrics.json", metrics_report_to_json(report));
  files.add("roc.csv", roc_curve_to_csv(roc_curve(frames.frames)));
  files.add("pr.csv", pr_curve_to_csv(pr_curve(frames.frames)));
  files.commit();
  out << "auc_roc " << text::format_double(report.auc_roc) << " auc_pr "
      << text::format_double(report.auc_pr) << " eer " << text::format_double(report.eer)
      << "\n";
  return kOk;
}

AnomalySpec parse_anomaly_flag(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw UsageError("--anomaly expects MODE:MAGNITUDE");
  try {
    return {parse_anomaly_mode(text.substr(0, colon)),
            text::parse_finite_double(text.substr(colon + 1))};
  } catch (const std::exception& e) {
    throw UsageError("--anomaly " + text + ": " + e.what());
  }
}

int cmd_synth(const RunConfig& rc, std::ostream& out) {
  SynthSpec spec;
  spec.n_videos = rc.n_videos;
  spec.train_videos = rc.train_videos;
  spec.frames_per_video = rc.frames_per_video;
  spec.persons_per_video = rc.persons;
  if (rc.keypoints) spec.keypoints = *rc.keypoints;
  spec.max_speed = rc.max_speed;
  spec.jitter_std = rc.jitter;
  spec.anomaly_fraction = rc.anomaly_fraction;
  spec.seed = rc.seed;
  spec.anomalies.clear();
  for (const auto& a : rc.anomalies) spec.anomalies.push_back(parse_anomaly_flag(a));
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  auto cfg = windowing(rc);
  cfg.keypoints = spec.keypoints;
  const auto bundle = generate(spec, cfg);

  Outputs files(rc.out);
  files.add("tracklets.tsv",
            stream_to_string([&](std::ostream& os) { write_tracklets(os, bundle.tracklets); }));
  files.add("labels.csv",
            stream_to_string([&](std::ostream& os) { write_labels(os, bundle.labels); }));
  files.add("manifest.json", manifest_to_json(bundle.videos));
  files.add("synth.json", synth_spec_to_json(spec));
  if (rc.oracle) {
    OracleMode mode;
    mode.kind = parse_oracle_kind(*rc.oracle);
    mode.seed = rc.seed;
    mode.feature = feature_or(rc, FeatureType::Pose);
    const auto scores = oracle_scores(bundle, mode);
    files.add("scores.csv", stream_to_string([&](std::ostream& os) { write_scores(os, scores); }));
  }
  files.commit();
  out << "videos " << bundle.videos.size() << ", tracklets " << bundle.tracklets.size()
      << ", labeled frames " << bundle.labels.size() << "\n";
  return kOk;
}

int cmd_report(const RunConfig& rc, std::ostream& out) {
  const auto bundle = load_input(rc);
  validate_bundle(bundle);
  DifficultyOptions options;
  options.binning = binning_of(rc);
  options.center = !rc.no_center;
  options.social.truncate = rc.truncate_social;
  options.features.clear();
  if (rc.feature) {
    options.features.push_back(parse_feature_type(*rc.feature));
  } else {
    for (auto name : text::split(rc.features, ',')) {
      try {
        options.features.push_back(parse_feature_type(name));
      } catch (const ParseError& e) {
        throw UsageError(std::string("--features: ") + e.what());
      }
    }
  }
  const auto report = difficulty_report(bundle, options);
  log_warnings(report.warnings);
  const auto json_text = difficulty_report_to_json(report);
  if (const auto problems = validate_report_json(json_text); !problems.empty()) {
    throw std::logic_error("report failed its schema check: " + problems.front());
  }
  Outputs files(rc.out);
  files.add("report.json", json_text);
  for (const auto& f : report.features) {
    files.add("report_hist_" + std::string(short_name(f.type)) + ".csv",
              histograms_to_csv(f.histograms));
  }
  files.commit();
  for (auto type : report.ranking) {
    const auto it = std::find_if(report.features.begin(), report.features.end(),
                                 [&](const auto& f) { return f.type == type; });
    out << short_name(type) << ": sdom " << text::format_double(it->sdom->sdom()) << "\n";
  }
  return kOk;
}

void error_json(std::ostream& err, const std::string& kind, const std::string& command,
                const std::string& message, std::optional<std::size_t> line = {}) {
  nlohmann::json e{{"error", kind}, {"command", command}, {"message", message}};
  if (line && *line > 0) e["line"] = *line;
  err << e.dump() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig rc;
  CLI::App app{"Skeleton anomaly-detection dataset analysis", "skeldiff"};
  app.require_subcommand(1);
  app.fallthrough();

  app.add_option("--data", rc.data_dir, "Bundle directory (tracklets.tsv, labels.csv, manifest.json)")
      ->check(CLI::ExistingDirectory);
  app.add_option("--tracklets", rc.tracklets, "Tracklet file")->check(CLI::ExistingFile);
  app.add_option("--labels", rc.labels, "Frame label file")->check(CLI::ExistingFile);
  app.add_option("--manifest", rc.manifest, "Video manifest JSON")->check(CLI::ExistingFile);
  app.add_option("--windows", rc.windows, "Window file from `skeldiff windows`")
      ->check(CLI::ExistingFile);
  app.add_option("--scores", rc.scores, "Frame score file")->check(CLI::ExistingFile);
  auto* embeddings = app.add_option("--embeddings", rc.embeddings, "Latent embedding file")
                         ->check(CLI::ExistingFile);
  app.add_option("--out", rc.out, "Output directory")->capture_default_str();
  app.add_option("--seed", rc.seed, "Random seed")->capture_default_str();
  app.add_option("--t", rc.frames, "Window length T (default 24)")->check(CLI::PositiveNumber);
  app.add_option("--stride", rc.stride, "Window stride (default 6)")->check(CLI::PositiveNumber);
  app.add_option("--nodes", rc.nodes, "Social node slots N (default 35)")
      ->check(CLI::PositiveNumber);
  app.add_option("--keypoints", rc.keypoints, "Keypoints per pose k (default 17)")
      ->check(CLI::PositiveNumber);
  app.add_option("--label-rule", rc.label_rule, "Window label rule")
      ->check(CLI::IsMember({"any", "majority"}))
      ->capture_default_str();
  app.add_flag("--no-center", rc.no_center, "Disable first-pose centering");
  app.add_flag("--truncate-social", rc.truncate_social,
               "Keep the N lowest track ids in crowded social windows");
  auto* feature = app.add_option("--feature", rc.feature, "Feature type")
                      ->check(CLI::IsMember({"pose", "traj", "social"}));
  app.add_option("--binning", rc.binning, "auto | count:N | width:W")->capture_default_str();
  app.add_option("--polarity", rc.polarity, "Score polarity")
      ->check(CLI::IsMember({"anomaly", "normality"}))
      ->capture_default_str();
  embeddings->excludes(feature);
  feature->excludes(embeddings);

  app.add_subcommand("validate", "Check a bundle and write validation.json")->fallthrough();
  app.add_subcommand("windows", "Write window files per feature type")->fallthrough();
  app.add_subcommand("sdom", "Mean distances and S-DoM for one feature type")->fallthrough();
  app.add_subcommand("dist-hist", "Distance-to-mean histograms and box statistics")
      ->fallthrough();

  auto* metrics = app.add_subcommand("metrics", "AUC-ROC, AUC-PR and EER of frame scores");
  metrics->fallthrough();
  metrics->add_flag("--per-video-average", rc.per_video_average,
                    "Average metrics over videos instead of concatenating frames");
  metrics->add_flag("--drop-uncovered", rc.drop_uncovered,
                    "Drop labeled frames without a score instead of scoring them least anomalous");

  auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic bundle");
  synth->fallthrough();
  synth->add_option("--n-videos", rc.n_videos)->capture_default_str();
  synth->add_option("--train-videos", rc.train_videos)->capture_default_str();
  synth->add_option("--frames-per-video", rc.frames_per_video)->capture_default_str();
  synth->add_option("--persons", rc.persons)->capture_default_str();
  synth->add_option("--anomaly", rc.anomalies,
                    "MODE:MAGNITUDE with MODE trajectory_shift, pose_deform or group_converge")
      ->capture_default_str();
  synth->add_option("--anomaly-fraction", rc.anomaly_fraction)->capture_default_str();
  synth->add_option("--max-speed", rc.max_speed)->capture_default_str();
  synth->add_option("--jitter", rc.jitter)->capture_default_str();
  synth->add_option("--oracle", rc.oracle, "Also write scores.csv from an oracle detector")
      ->check(CLI::IsMember({"perfect", "random", "distance"}));

  auto* report = app.add_subcommand("report", "Consolidated difficulty report");
  report->fallthrough();
  report->add_option("--features", rc.features, "Comma-separated feature types")
      ->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    error_json(err, "usage", "", e.what());
    return kUsage;
  }
  rc.command = app.get_subcommands().front()->get_name();
  logger()->debug("running {}", rc.command);

  try {
    if (rc.command == "validate") return cmd_validate(rc, out, err);
    if (rc.command == "windows") return cmd_windows(rc, out);
    if (rc.command == "sdom") return cmd_sdom(rc, out);
    if (rc.command == "dist-hist") return cmd_dist_hist(rc, out);
    if (rc.command == "metrics") return cmd_metrics(rc, out);
    if (rc.command == "synth") return cmd_synth(rc, out);
    if (rc.command == "report") return cmd_report(rc, out);
  } catch (const UsageError& e) {
    error_json(err, "usage", rc.command, e.what());
    return kUsage;
  } catch (const ParseError& e) {
    error_json(err, "parse", rc.command, e.what(), e.line());
    return kBadInput;
  } catch (const ValidationError& e) {
    error_json(err, "validation", rc.command, e.what());
    return kBadInput;
  } catch (const std::length_error& e) {
    error_json(err, "capacity", rc.command, e.what());
    return kBadInput;
  } catch (const std::invalid_argument& e) {
    error_json(err, "invalid_input", rc.command, e.what());
    return kBadInput;
  } catch (const std::exception& e) {
    error_json(err, "failure", rc.command, e.what());
    return kFailure;
  }
  error_json(err, "usage", rc.command, "unknown command");
  return kUsage;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace skeldiff::cli
