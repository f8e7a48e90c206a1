#include "skeldiff/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "skeldiff/text.hpp"

namespace skeldiff {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct ThresholdGroup {
  double score;
  std::size_t pos;
  std::size_t neg;
};

struct Counts {
  std::vector<ThresholdGroup> groups;  // descending score
  std::size_t pos = 0;
  std::size_t neg = 0;
};

Counts group_by_score(std::span<const ScoredFrame> samples) {
  std::vector<std::pair<double, bool>> sorted;
  sorted.reserve(samples.size());
  for (const auto& s : samples) {
    if (!std::isfinite(s.score)) throw std::invalid_argument("non-finite score");
    sorted.emplace_back(s.score, s.label == Label::Anomalous);
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  Counts c;
  for (const auto& [score, positive] : sorted) {
    if (c.groups.empty() || c.groups.back().score != score) c.groups.push_back({score, 0, 0});
    if (positive) {
      ++c.groups.back().pos;
      ++c.pos;
    } else {
      ++c.groups.back().neg;
      ++c.neg;
    }
  }
  return c;
}

void require_both_classes(const Counts& c) {
  if (c.pos == 0 || c.neg == 0) {
    throw std::invalid_argument("ROC metrics need at least one positive and one negative sample");
  }
}

}  // namespace

std::vector<RocPoint> roc_curve(std::span<const ScoredFrame> samples) {
  const auto c = group_by_score(samples);
  require_both_classes(c);
  std::vector<RocPoint> curve;
  curve.reserve(c.groups.size() + 1);
  curve.push_back({kInf, 0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  const auto P = static_cast<double>(c.pos);
  const auto N = static_cast<double>(c.neg);
  for (const auto& g : c.groups) {
    tp += g.pos;
    fp += g.neg;
    curve.push_back({g.score, static_cast<double>(fp) / N, static_cast<double>(tp) / P});
  }
  return curve;
}

double auc_roc(std::span<const ScoredFrame> samples) {
  const auto c = group_by_score(samples);
  require_both_classes(c);
  // Twice the trapezoid area in count units; exact for < 2^53 samples.
  double area2 = 0.0;
  std::size_t tp = 0;
  for (const auto& g : c.groups) {
    area2 += static_cast<double>(g.neg) * static_cast<double>(2 * tp + g.pos);
    tp += g.pos;
  }
  return area2 / (2.0 * static_cast<double>(c.pos) * static_cast<double>(c.neg));
}

std::vector<PrPoint> pr_curve(std::span<const ScoredFrame> samples) {
  const auto c = group_by_score(samples);
  if (c.pos == 0) throw std::invalid_argument("precision-recall needs at least one positive");
  std::vector<PrPoint> curve;
  curve.reserve(c.groups.size() + 1);
  curve.push_back({kInf, 0.0, 1.0});
  std::size_t tp = 0, fp = 0;
  for (const auto& g : c.groups) {
    tp += g.pos;
    fp += g.neg;
    curve.push_back({g.score, static_cast<double>(tp) / static_cast<double>(c.pos),
                     static_cast<double>(tp) / static_cast<double>(tp + fp)});
  }
  return curve;
}

double auc_pr(std::span<const ScoredFrame> samples) {
  const auto curve = pr_curve(samples);
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    area += (curve[i].recall - curve[i - 1].recall) * curve[i].precision;
  }
  return std::clamp(area, 0.0, 1.0);
}

EerResult eer(std::span<const ScoredFrame> samples) {
  const auto curve = roc_curve(samples);
  auto gap = [&](std::size_t i) { return curve[i].fpr - (1.0 - curve[i].tpr); };
  // gap is -1 at the origin, +1 at the end and non-decreasing in between.
  std::size_t hi = 1;
  while (hi + 1 < curve.size() && gap(hi) < 0.0) ++hi;
  const std::size_t lo = hi - 1;
  const double g_lo = gap(lo);
  const double g_hi = gap(hi);

  EerResult out;
  if (g_hi == 0.0) {
    out.eer = curve[hi].fpr;
  } else {
    const double alpha = -g_lo / (g_hi - g_lo);
    out.eer = curve[lo].fpr + alpha * (curve[hi].fpr - curve[lo].fpr);
  }
  const bool take_lo = lo > 0 && std::abs(g_lo) < std::abs(g_hi);
  out.threshold = curve[take_lo ? lo : hi].threshold;
  out.eer = std::clamp(out.eer, 0.0, 1.0);
  return out;
}

MetricsReport evaluate(std::span<const ScoredFrame> samples, Averaging averaging) {
  MetricsReport report;
  for (const auto& s : samples) {
    (s.label == Label::Anomalous ? report.n_pos : report.n_neg) += 1;
  }
  if (averaging == Averaging::Concatenate) {
    report.auc_roc = auc_roc(samples);
    report.auc_pr = auc_pr(samples);
    const auto e = eer(samples);
    report.eer = e.eer;
    report.eer_threshold = e.threshold;
    report.validate();
    return report;
  }
  std::map<std::string, std::vector<ScoredFrame>> per_video;
  for (const auto& s : samples) per_video[s.video_id].push_back(s);
  std::size_t used = 0;
  for (const auto& [video, frames] : per_video) {
    const bool has_pos = std::any_of(frames.begin(), frames.end(),
                                     [](const auto& f) { return f.label == Label::Anomalous; });
    const bool has_neg = std::any_of(frames.begin(), frames.end(),
                                     [](const auto& f) { return f.label == Label::Normal; });
    if (!has_pos || !has_neg) continue;
    report.auc_roc += auc_roc(frames);
    report.auc_pr += auc_pr(frames);
    const auto e = eer(frames);
    report.eer += e.eer;
    report.eer_threshold += e.threshold;
    ++used;
  }
  if (used == 0) throw std::invalid_argument("no video contains both classes");
  const auto n = static_cast<double>(used);
  report.auc_roc /= n;
  report.auc_pr /= n;
  report.eer /= n;
  report.eer_threshold /= n;
  report.validate();
  return report;
}

FrameScores windows_to_frame_scores(std::span<const WindowScore> windows,
                                    std::span<const FrameLabel> evaluated,
                                    FrameScoreOptions options) {
  std::unordered_map<std::string, std::map<FrameIndex, double>> best;
  double lowest = kInf;
  for (const auto& w : windows) {
    if (!std::isfinite(w.score)) throw std::invalid_argument("non-finite window score");
    lowest = std::min(lowest, w.score);
    auto& frames = best[w.video_id];
    for (std::size_t t = 0; t < w.frames; ++t) {
      auto [it, inserted] = frames.emplace(w.start_frame + static_cast<FrameIndex>(t), w.score);
      if (!inserted) it->second = std::max(it->second, w.score);
    }
  }
  const double sentinel = options.sentinel.value_or(std::isfinite(lowest) ? lowest : 0.0);

  FrameScores out;
  out.frames.reserve(evaluated.size());
  for (const auto& l : evaluated) {
    std::optional<double> score;
    if (auto v = best.find(l.video_id); v != best.end()) {
      if (auto f = v->second.find(l.frame_index); f != v->second.end()) score = f->second;
    }
    if (!score) {
      ++out.uncovered;
      if (options.uncovered == UncoveredPolicy::Drop) continue;
      score = sentinel;
    }
    out.frames.push_back({l.video_id, l.frame_index, *score, l.label});
  }
  return out;
}

std::string metrics_report_to_json(const MetricsReport& report) {
  nlohmann::json doc;
  doc["auc_roc"] = report.auc_roc;
  doc["auc_pr"] = report.auc_pr;
  doc["eer"] = report.eer;
  doc["eer_threshold"] = report.eer_threshold;
  doc["n_pos"] = report.n_pos;
  doc["n_neg"] = report.n_neg;
  doc["uncovered_frames"] = report.uncovered_frames;
  return doc.dump(2) + "\n";
}

std::string roc_curve_to_csv(std::span<const RocPoint> curve) {
  std::string out = "threshold,fpr,tpr\n";
  for (const auto& p : curve) {
    out += text::format_double(p.threshold) + ',' + text::format_double(p.fpr) + ',' +
           text::format_double(p.tpr) + '\n';
  }
  return out;
}

std::string pr_curve_to_csv(std::span<const PrPoint> curve) {
  std::string out = "threshold,recall,precision\n";
  for (const auto& p : curve) {
    out += text::format_double(p.threshold) + ',' + text::format_double(p.recall) + ',' +
           text::format_double(p.precision) + '\n';
  }
  return out;
}

}  // namespace skeldiff
