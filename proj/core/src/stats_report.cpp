#include "skeldiff/stats_report.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "skeldiff/text.hpp"

namespace skeldiff {

using nlohmann::json;

Binning parse_binning(std::string_view text) {
  if (text == "auto") return Binning::automatic();
  if (text.starts_with("count:")) {
    const auto n = text::parse_int(text.substr(6));
    if (n < 1) throw std::invalid_argument("bin count must be positive");
    return Binning::fixed_count(static_cast<std::size_t>(n));
  }
  if (text.starts_with("width:")) {
    const double w = text::parse_finite_double(text.substr(6));
    if (!(w > 0.0)) throw std::invalid_argument("bin width must be positive");
    return Binning::fixed_width(w);
  }
  throw std::invalid_argument("binning must be auto, count:<n> or width:<w>");
}

std::string to_string(const Binning& binning) {
  switch (binning.kind) {
    case Binning::Kind::FixedCount:
      return "count:" + std::to_string(static_cast<std::size_t>(binning.value));
    case Binning::Kind::FixedWidth:
      return "width:" + text::format_double(binning.value);
    case Binning::Kind::Auto:
      return "auto";
  }
  return "?";
}

double quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of an empty series");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Histogram histogram(const DistanceSeries& series, Binning binning) {
  if (series.values.empty()) throw std::invalid_argument("histogram of an empty series");
  Histogram h;
  h.split = series.split;
  h.tag = series.tag;
  const auto [min_it, max_it] = std::minmax_element(series.values.begin(), series.values.end());
  const double lo = *min_it;
  const double hi = *max_it;

  if (binning.kind == Binning::Kind::Auto) {
    std::vector<double> sorted = series.values;
    std::sort(sorted.begin(), sorted.end());
    const double iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
    if (iqr <= 0.0) {
      binning = Binning::fixed_count(10);
    } else {
      const double width = 2.0 * iqr / std::cbrt(static_cast<double>(sorted.size()));
      const double bins = std::ceil((hi - lo) / width);
      binning = Binning::fixed_count(static_cast<std::size_t>(std::clamp(bins, 10.0, 200.0)));
    }
  }

  if (binning.kind == Binning::Kind::FixedCount) {
    const auto n = static_cast<std::size_t>(binning.value);
    if (n == 0) throw std::invalid_argument("bin count must be positive");
    h.bin_edges.resize(n + 1);
    if (hi > lo) {
      for (std::size_t i = 0; i <= n; ++i) {
        h.bin_edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n);
      }
      h.bin_edges.back() = hi;
    } else {
      for (std::size_t i = 0; i <= n; ++i) {
        h.bin_edges[i] = lo - 0.5 + static_cast<double>(i) / static_cast<double>(n);
      }
    }
  } else {
    const double w = binning.value;
    if (!(w > 0.0)) throw std::invalid_argument("bin width must be positive");
    const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((hi - lo) / w)));
    h.bin_edges.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) h.bin_edges[i] = lo + w * static_cast<double>(i);
    // Rounding can leave the top edge a hair below the maximum.
    if (h.bin_edges.back() < hi) h.bin_edges.back() = hi;
  }

  h.counts.assign(h.bin_edges.size() - 1, 0);
  for (double v : series.values) {
    auto it = std::upper_bound(h.bin_edges.begin(), h.bin_edges.end(), v);
    auto idx = static_cast<std::size_t>(std::distance(h.bin_edges.begin(), it));
    idx = idx == 0 ? 0 : std::min(idx - 1, h.counts.size() - 1);
    ++h.counts[idx];
  }
  return h;
}

BoxStats box_stats(const DistanceSeries& series) {
  if (series.values.empty()) throw std::invalid_argument("box statistics of an empty series");
  std::vector<double> sorted = series.values;
  std::sort(sorted.begin(), sorted.end());
  const double q1 = quantile(sorted, 0.25);
  const double median = quantile(sorted, 0.5);
  const double q3 = quantile(sorted, 0.75);
  const double iqr = q3 - q1;
  const double lo_bound = q1 - 1.5 * iqr;
  const double hi_bound = q3 + 1.5 * iqr;
  const double lower = *std::lower_bound(sorted.begin(), sorted.end(), lo_bound);
  auto up = std::upper_bound(sorted.begin(), sorted.end(), hi_bound);
  const double upper = *std::prev(up);
  return BoxStats(std::min(lower, q1), q1, median, q3, std::max(upper, q3));
}

std::string histograms_to_csv(std::span<const Histogram> histograms) {
  std::string out = "bin_left,bin_right,count,split\n";
  for (const auto& h : histograms) {
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      out += text::format_double(h.bin_edges[i]) + ',' + text::format_double(h.bin_edges[i + 1]) +
             ',' + std::to_string(h.counts[i]) + ',' + std::string(to_string(h.split)) + '\n';
    }
  }
  return out;
}

namespace {

constexpr Split kSplits[] = {Split::Train, Split::ValidationNormal, Split::ValidationAnomalous};

json box_json(const BoxStats& b) {
  return {{"lower_fence", b.lower_fence()},
          {"q1", b.q1()},
          {"median", b.median()},
          {"q3", b.q3()},
          {"upper_fence", b.upper_fence()}};
}

json histogram_json(const Histogram& h) {
  return {{"split", std::string(to_string(h.split))},
          {"bin_edges", h.bin_edges},
          {"counts", h.counts}};
}

}  // namespace

std::string box_stats_to_json(const std::map<Split, BoxStats>& stats, std::string_view tag) {
  json doc;
  doc["tag"] = std::string(tag);
  json splits = json::object();
  for (const auto& [split, b] : stats) splits[std::string(to_string(split))] = box_json(b);
  doc["box_stats"] = std::move(splits);
  return doc.dump(2) + "\n";
}

DifficultyReport difficulty_report(const DatasetBundle& bundle, const DifficultyOptions& options) {
  DifficultyReport report;
  report.config = bundle.config;
  report.options = options;

  for (const auto type : options.features) {
    FeatureDifficulty fd;
    fd.type = type;
    const auto policy = options.center ? default_center_policy(type) : CenterPolicy::None;
    const auto set = build_windows(bundle, type, policy, options.social);
    fd.warnings = set.warnings;

    std::map<Split, std::vector<FeatureWindow>> by_split;
    for (auto s : kSplits) by_split[s] = select_split(set.windows, s);
    for (auto s : kSplits) {
      const auto n = by_split[s].size();
      if (n == 0) {
        fd.warnings.push_back("split " + std::string(to_string(s)) + " has no windows");
      } else if (n == 1) {
        fd.warnings.push_back("split " + std::string(to_string(s)) + " has a single window");
      }
    }

    const auto& train = by_split[Split::Train];
    if (!by_split[Split::ValidationNormal].empty() &&
        !by_split[Split::ValidationAnomalous].empty() && !train.empty()) {
      fd.sdom = sdom_report(train, by_split[Split::ValidationNormal],
                            by_split[Split::ValidationAnomalous], type);
    } else {
      fd.warnings.push_back("S-DoM undefined: every split needs at least one window");
    }
    if (!train.empty()) {
      const auto mu = mean_tensor(train);
      for (auto s : kSplits) {
        if (by_split[s].empty()) continue;
        const auto series = distances_to_mean(by_split[s], mu, std::string(short_name(type)));
        fd.box.emplace(s, box_stats(series));
        fd.histograms.push_back(histogram(series, options.binning));
      }
    }
    report.features.push_back(std::move(fd));
  }

  std::vector<const FeatureDifficulty*> ranked;
  for (const auto& f : report.features) {
    if (f.sdom) ranked.push_back(&f);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto* a, const auto* b) {
    return a->sdom->sdom() > b->sdom->sdom();
  });
  for (const auto* f : ranked) report.ranking.push_back(f->type);
  for (const auto& f : report.features) {
    for (const auto& w : f.warnings) {
      report.warnings.push_back(std::string(short_name(f.type)) + ": " + w);
    }
  }
  return report;
}

std::string difficulty_report_to_json(const DifficultyReport& report) {
  json doc;
  doc["schema_version"] = 1;
  doc["config"] = {{"frames", report.config.frames},
                   {"stride", report.config.stride},
                   {"keypoints", report.config.keypoints},
                   {"social_nodes", report.config.social_nodes},
                   {"center", report.options.center},
                   {"binning", to_string(report.options.binning)}};
  json features = json::array();
  for (const auto& f : report.features) {
    json fj;
    fj["feature_type"] = std::string(short_name(f.type));
    if (f.sdom) {
      fj["sdom"] = {{"delta_n", f.sdom->delta_n()},
                    {"delta_a", f.sdom->delta_a()},
                    {"sdom", f.sdom->sdom()},
                    {"counts",
                     {{"train", f.sdom->counts().train},
                      {"val_normal", f.sdom->counts().val_normal},
                      {"val_anomalous", f.sdom->counts().val_anomalous}}}};
    } else {
      fj["sdom"] = nullptr;
    }
    json box = json::object();
    for (auto s : kSplits) {
      auto it = f.box.find(s);
      box[std::string(to_string(s))] = it == f.box.end() ? json(nullptr) : box_json(it->second);
    }
    fj["box_stats"] = std::move(box);
    json hists = json::array();
    for (const auto& h : f.histograms) hists.push_back(histogram_json(h));
    fj["histograms"] = std::move(hists);
    fj["warnings"] = f.warnings;
    features.push_back(std::move(fj));
  }
  doc["features"] = std::move(features);
  json ranking = json::array();
  for (auto t : report.ranking) ranking.push_back(std::string(short_name(t)));
  doc["ranking"] = std::move(ranking);
  doc["warnings"] = report.warnings;
  return doc.dump(2) + "\n";
}

namespace {

void check_number(const json& j, const char* key, const std::string& at,
                  std::vector<std::string>& errors) {
  if (!j.contains(key) || !j[key].is_number()) errors.push_back(at + "." + key + " must be a number");
}

void check_count(const json& j, const char* key, const std::string& at,
                 std::vector<std::string>& errors) {
  if (!j.contains(key) || !j[key].is_number_unsigned()) {
    errors.push_back(at + "." + key + " must be a non-negative integer");
  }
}

void check_strings(const json& j, const char* key, const std::string& at,
                   std::vector<std::string>& errors) {
  if (!j.contains(key) || !j[key].is_array()) {
    errors.push_back(at + "." + key + " must be an array");
    return;
  }
  for (const auto& s : j[key]) {
    if (!s.is_string()) errors.push_back(at + "." + key + " must hold strings");
  }
}

}  // namespace

std::vector<std::string> validate_report_json(std::string_view json_text) {
  std::vector<std::string> errors;
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    return {std::string("not JSON: ") + e.what()};
  }
  if (!doc.is_object()) return {"report must be an object"};
  if (!doc.contains("schema_version") || doc["schema_version"] != 1) {
    errors.push_back("schema_version must be 1");
  }
  if (!doc.contains("config") || !doc["config"].is_object()) {
    errors.push_back("config must be an object");
  } else {
    for (auto key : {"frames", "stride", "keypoints", "social_nodes"}) {
      check_count(doc["config"], key, "config", errors);
    }
    if (!doc["config"].contains("center") || !doc["config"]["center"].is_boolean()) {
      errors.push_back("config.center must be a boolean");
    }
    if (!doc["config"].contains("binning") || !doc["config"]["binning"].is_string()) {
      errors.push_back("config.binning must be a string");
    }
  }
  check_strings(doc, "warnings", "report", errors);
  std::vector<std::string> feature_names;
  if (!doc.contains("features") || !doc["features"].is_array()) {
    errors.push_back("features must be an array");
  } else {
    for (std::size_t i = 0; i < doc["features"].size(); ++i) {
      const auto& f = doc["features"][i];
      const std::string at = "features[" + std::to_string(i) + "]";
      if (!f.is_object()) {
        errors.push_back(at + " must be an object");
        continue;
      }
      if (!f.contains("feature_type") || !f["feature_type"].is_string() ||
          (f["feature_type"] != "pose" && f["feature_type"] != "traj" &&
           f["feature_type"] != "social")) {
        errors.push_back(at + ".feature_type must be pose, traj or social");
      } else {
        feature_names.push_back(f["feature_type"]);
      }
      if (!f.contains("sdom")) {
        errors.push_back(at + ".sdom is required");
      } else if (!f["sdom"].is_null()) {
        const auto& s = f["sdom"];
        for (auto key : {"delta_n", "delta_a", "sdom"}) check_number(s, key, at + ".sdom", errors);
        if (s.contains("delta_n") && s.contains("delta_a") && s.contains("sdom") &&
            s["delta_n"].is_number() && s["delta_a"].is_number() && s["sdom"].is_number()) {
          const double dn = s["delta_n"], da = s["delta_a"], sd = s["sdom"];
          if (dn < 0 || da < 0) errors.push_back(at + ".sdom deltas must be non-negative");
          if (sd != da - dn) errors.push_back(at + ".sdom.sdom must equal delta_a - delta_n");
        }
        if (!s.contains("counts") || !s["counts"].is_object()) {
          errors.push_back(at + ".sdom.counts must be an object");
        } else {
          for (auto key : {"train", "val_normal", "val_anomalous"}) {
            check_count(s["counts"], key, at + ".sdom.counts", errors);
          }
        }
      }
      if (!f.contains("box_stats") || !f["box_stats"].is_object()) {
        errors.push_back(at + ".box_stats must be an object");
      } else {
        for (auto split : {"train", "val_normal", "val_anomalous"}) {
          if (!f["box_stats"].contains(split)) {
            errors.push_back(at + ".box_stats." + split + " is required");
            continue;
          }
          const auto& b = f["box_stats"][split];
          if (b.is_null()) continue;
          const std::string bat = at + ".box_stats." + split;
          const char* keys[] = {"lower_fence", "q1", "median", "q3", "upper_fence"};
          bool numeric = true;
          for (auto key : keys) {
            check_number(b, key, bat, errors);
            numeric = numeric && b.contains(key) && b[key].is_number();
          }
          if (numeric) {
            for (int k = 0; k + 1 < 5; ++k) {
              if (b[keys[k]].get<double>() > b[keys[k + 1]].get<double>()) {
                errors.push_back(bat + " must be ordered");
                break;
              }
            }
          }
        }
      }
      if (!f.contains("histograms") || !f["histograms"].is_array()) {
        errors.push_back(at + ".histograms must be an array");
      } else {
        for (std::size_t h = 0; h < f["histograms"].size(); ++h) {
          const auto& hj = f["histograms"][h];
          const std::string hat = at + ".histograms[" + std::to_string(h) + "]";
          if (!hj.is_object() || !hj.contains("bin_edges") || !hj["bin_edges"].is_array() ||
              !hj.contains("counts") || !hj["counts"].is_array() || !hj.contains("split") ||
              !hj["split"].is_string()) {
            errors.push_back(hat + " needs split, bin_edges and counts");
            continue;
          }
          if (hj["bin_edges"].size() != hj["counts"].size() + 1) {
            errors.push_back(hat + " needs one more edge than counts");
          }
          for (std::size_t e = 1; e < hj["bin_edges"].size(); ++e) {
            if (!(hj["bin_edges"][e - 1].get<double>() < hj["bin_edges"][e].get<double>())) {
              errors.push_back(hat + ".bin_edges must be strictly ascending");
              break;
            }
          }
        }
      }
      check_strings(f, "warnings", at, errors);
    }
  }
  if (!doc.contains("ranking") || !doc["ranking"].is_array()) {
    errors.push_back("ranking must be an array");
  } else {
    for (const auto& r : doc["ranking"]) {
      if (!r.is_string() ||
          std::find(feature_names.begin(), feature_names.end(), r.get<std::string>()) ==
              feature_names.end()) {
        errors.push_back("ranking entries must name reported features");
      }
    }
  }
  return errors;
}

}  // namespace skeldiff
