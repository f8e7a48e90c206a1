#include "skeldiff/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "skeldiff/text.hpp"

namespace skeldiff {

void CompensatedSum::add(double value) noexcept {
  const double t = sum_ + value;
  if (std::abs(sum_) >= std::abs(value)) {
    compensation_ += (sum_ - t) + value;
  } else {
    compensation_ += (value - t) + sum_;
  }
  sum_ = t;
}

MeanTensor mean_tensor(std::span<const FeatureWindow> windows) {
  if (windows.empty()) throw std::invalid_argument("mean of an empty window set");
  const auto& first = windows.front().coords();
  std::vector<CompensatedSum> sums(first.size());
  for (const auto& w : windows) {
    if (!w.coords().same_shape(first)) {
      throw std::invalid_argument("mean over windows of different shapes");
    }
    const auto values = w.coords().values();
    for (std::size_t i = 0; i < values.size(); ++i) sums[i].add(values[i]);
  }
  const auto p = static_cast<double>(windows.size());
  std::vector<double> mean(first.size());
  for (std::size_t i = 0; i < mean.size(); ++i) mean[i] = sums[i].value() / p;
  return MeanTensor(CoordTensor(first.frames(), first.nodes(), std::move(mean)), windows.size());
}

double delta(const MeanTensor& a, const MeanTensor& b) {
  if (!a.values().same_shape(b.values())) {
    throw std::invalid_argument("delta between means of different shapes");
  }
  const auto va = a.values().values();
  const auto vb = b.values().values();
  CompensatedSum sq;
  for (std::size_t i = 0; i < va.size(); ++i) {
    const double d = va[i] - vb[i];
    sq.add(d * d);
  }
  return std::sqrt(sq.value()) / static_cast<double>(a.values().frames());
}

double sdom(double delta_a, double delta_n) {
  if (!std::isfinite(delta_a) || !std::isfinite(delta_n) || delta_a < 0.0 || delta_n < 0.0) {
    throw std::invalid_argument("mean distances must be finite and non-negative");
  }
  return delta_a - delta_n;
}

SdomReport sdom_report(std::span<const FeatureWindow> train_normal,
                       std::span<const FeatureWindow> val_normal,
                       std::span<const FeatureWindow> val_anomalous, FeatureType type) {
  if (train_normal.empty()) throw std::invalid_argument("no training-normal windows");
  if (val_normal.empty()) throw std::invalid_argument("no validation-normal windows");
  if (val_anomalous.empty()) throw std::invalid_argument("no validation-anomalous windows");
  const auto mu_tn = mean_tensor(train_normal);
  const auto mu_vn = mean_tensor(val_normal);
  const auto mu_va = mean_tensor(val_anomalous);
  const double dn = delta(mu_tn, mu_vn);
  const double da = delta(mu_tn, mu_va);
  return SdomReport(dn, da, type,
                    {train_normal.size(), val_normal.size(), val_anomalous.size()});
}

SdomReport sdom_report(std::span<const FeatureWindow> windows, FeatureType type) {
  std::vector<FeatureWindow> train, vn, va;
  for (const auto& w : windows) {
    switch (w.split()) {
      case Split::Train:
        train.push_back(w);
        break;
      case Split::ValidationNormal:
        vn.push_back(w);
        break;
      case Split::ValidationAnomalous:
        va.push_back(w);
        break;
    }
  }
  return sdom_report(train, vn, va, type);
}

DistanceSeries distances_to_mean(std::span<const FeatureWindow> windows, const MeanTensor& mu,
                                 std::string tag) {
  DistanceSeries series;
  series.tag = std::move(tag);
  if (!windows.empty()) series.split = windows.front().split();
  for (const auto& w : windows) {
    if (!w.coords().same_shape(mu.values())) {
      throw std::invalid_argument("window shape does not match mean shape");
    }
  }
  series.values.resize(windows.size());
  const auto m = mu.values().values();
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto v = windows[i].coords().values();
      double sq = 0.0;
      for (std::size_t e = 0; e < v.size(); ++e) {
        const double d = v[e] - m[e];
        sq += d * d;
      }
      series.values[i] = std::sqrt(sq);
    }
  };
  const std::size_t workers =
      windows.size() < 4096 ? 1 : std::max(1u, std::thread::hardware_concurrency());
  if (workers == 1) {
    work(0, windows.size());
    return series;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (windows.size() + workers - 1) / workers;
  for (std::size_t begin = 0; begin < windows.size(); begin += chunk) {
    pool.emplace_back(work, begin, std::min(windows.size(), begin + chunk));
  }
  pool.clear();
  return series;
}

std::map<Split, DistanceSeries> latent_distances(std::span<const EmbeddingRecord> records,
                                                 const EmbeddingPrior& prior) {
  std::map<Split, DistanceSeries> out;
  for (auto s : {Split::Train, Split::ValidationNormal, Split::ValidationAnomalous}) {
    out[s].split = s;
    out[s].tag = "latent";
  }
  for (const auto& r : records) {
    if (r.vector.size() != prior.mu_normal.size()) {
      throw std::invalid_argument("embedding dimension does not match prior");
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < r.vector.size(); ++i) {
      const double d = r.vector[i] - prior.mu_normal[i];
      sq += d * d;
    }
    out[r.split].values.push_back(std::sqrt(sq));
  }
  return out;
}

std::string sdom_report_to_json(const SdomReport& report) {
  nlohmann::json doc;
  doc["feature_type"] = std::string(short_name(report.feature_type()));
  doc["delta_n"] = report.delta_n();
  doc["delta_a"] = report.delta_a();
  doc["sdom"] = report.sdom();
  doc["counts"] = {{"train", report.counts().train},
                   {"val_normal", report.counts().val_normal},
                   {"val_anomalous", report.counts().val_anomalous}};
  return doc.dump(2) + "\n";
}

std::string distance_series_to_csv(std::span<const DistanceSeries> series) {
  std::string out = "index,split,distance\n";
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      out += std::to_string(i);
      out += ',';
      out += to_string(s.split);
      out += ',';
      out += text::format_double(s.values[i]);
      out += '\n';
    }
  }
  return out;
}

}  // namespace skeldiff
