#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "oracles.hpp"
#include "skeldiff/analysis.hpp"

using namespace skeldiff;

namespace {

FeatureWindow constant_window(std::size_t frames, std::size_t nodes, double x, double y,
                              Split split) {
  CoordTensor c(frames, nodes);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t j = 0; j < nodes; ++j) c.set_point(t, j, {x, y});
  }
  const Label label = split == Split::ValidationAnomalous ? Label::Anomalous : Label::Normal;
  return FeatureWindow::dense(std::move(c), "v", 0, {0}, label, split);
}

std::vector<FeatureWindow> random_windows(std::mt19937_64& rng, std::size_t n, std::size_t frames,
                                          std::size_t nodes, Split split, double spread = 400.0) {
  std::vector<FeatureWindow> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(oracle::random_window(rng, frames, nodes, split, spread));
  }
  return out;
}

}  // namespace

TEST_CASE("S-DoM of tabulated mean distances") {
  struct Row {
    double dn, da, expected;
  };
  for (const Row& r : {Row{2.80, 3.75, 0.95}, Row{0.58, 0.76, 0.18}, Row{2.91, 2.76, -0.15},
                       Row{0.30, 0.13, -0.17}}) {
    CHECK(std::abs(sdom(r.da, r.dn) - r.expected) < 1e-12);
    const SdomReport rep(r.dn, r.da, FeatureType::Pose, {1, 1, 1});
    CHECK(std::abs(rep.sdom() - r.expected) < 1e-12);
  }
  CHECK_THROWS_AS(sdom(-1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(sdom(1.0, std::nan("")), std::invalid_argument);
}

TEST_CASE("identical splits give zero S-DoM") {
  std::mt19937_64 rng(1);
  const auto train = random_windows(rng, 20, 24, 17, Split::Train);
  std::vector<FeatureWindow> vn, va;
  for (const auto& w : train) {
    vn.push_back(FeatureWindow(w.coords(), {w.mask().begin(), w.mask().end()}, "v", 0, {0},
                               Label::Normal, Split::ValidationNormal));
    va.push_back(FeatureWindow(w.coords(), {w.mask().begin(), w.mask().end()}, "v", 0, {0},
                               Label::Anomalous, Split::ValidationAnomalous));
  }
  const auto rep = sdom_report(train, vn, va, FeatureType::Pose);
  CHECK(rep.delta_n() == 0.0);
  CHECK(rep.delta_a() == 0.0);
  CHECK(rep.sdom() == 0.0);
  CHECK(rep.counts() == SplitCounts{20, 20, 20});
}

TEST_CASE("constant offset gives the closed-form delta") {
  const std::size_t T = 24, k = 17;
  for (double offset : {0.5, 3.0, 40.0}) {
    std::vector<FeatureWindow> train{constant_window(T, k, 0, 0, Split::Train)};
    std::vector<FeatureWindow> vn{constant_window(T, k, 0, 0, Split::ValidationNormal)};
    std::vector<FeatureWindow> va{constant_window(T, k, offset, 0, Split::ValidationAnomalous)};
    const auto rep = sdom_report(train, vn, va, FeatureType::Pose);
    const double expected = offset * std::sqrt(static_cast<double>(T * k)) / T;
    CHECK(std::abs(rep.delta_a() - expected) < 1e-12);
    CHECK(rep.delta_n() == 0.0);
    CHECK(std::abs(rep.sdom() - expected) < 1e-12);
  }
}

TEST_CASE("missing splits are rejected") {
  std::mt19937_64 rng(2);
  const auto train = random_windows(rng, 3, 4, 2, Split::Train);
  const auto vn = random_windows(rng, 3, 4, 2, Split::ValidationNormal);
  CHECK_THROWS_AS(sdom_report(train, vn, {}, FeatureType::Pose), std::invalid_argument);
  CHECK_THROWS_AS(sdom_report({}, vn, vn, FeatureType::Pose), std::invalid_argument);
  CHECK_THROWS_AS(mean_tensor({}), std::invalid_argument);
  std::vector<FeatureWindow> mixed{train[0], oracle::random_window(rng, 5, 2)};
  CHECK_THROWS_AS(mean_tensor(mixed), std::invalid_argument);
}

TEST_CASE("mean and distances agree with brute force") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng() % 60, frames = 1 + rng() % 30, nodes = 1 + rng() % 18;
    const auto windows = random_windows(rng, n, frames, nodes, Split::Train, 1e3);
    const auto mu = mean_tensor(windows);
    const auto expected = oracle::brute_mean(windows);
    const auto got = mu.values().values();
    for (std::size_t e = 0; e < expected.size(); ++e) {
      CHECK(std::abs(got[e] - expected[e]) <= 1e-9 * std::max(1.0, std::abs(expected[e])));
    }
    const auto series = distances_to_mean(windows, mu, "pose");
    REQUIRE(series.values.size() == n);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = oracle::brute_norm_diff(windows[i].coords().values(), got);
      CHECK(std::abs(series.values[i] - d) <= 1e-9 * std::max(1.0, d));
    }
  }
}

TEST_CASE("threaded distance path matches the serial oracle") {
  std::mt19937_64 rng(4);
  const auto windows = random_windows(rng, 5000, 4, 3, Split::ValidationNormal);
  const auto mu = mean_tensor(windows);
  const auto series = distances_to_mean(windows, mu);
  CHECK(series.split == Split::ValidationNormal);
  REQUIRE(series.values.size() == windows.size());
  for (std::size_t i = 0; i < windows.size(); i += 37) {
    CHECK(series.values[i] ==
          doctest::Approx(oracle::brute_norm_diff(windows[i].coords().values(),
                                                  mu.values().values()))
              .epsilon(1e-12));
  }
}

TEST_CASE("compensated sum survives cancellation") {
  CompensatedSum s;
  s.add(1.0);
  s.add(1e100);
  s.add(1.0);
  s.add(-1e100);
  CHECK(s.value() == 2.0);
}

TEST_CASE("mean is permutation invariant to rounding") {
  std::mt19937_64 rng(5);
  auto windows = random_windows(rng, 300, 6, 5, Split::Train, 1e6);
  const auto a = mean_tensor(windows);
  std::shuffle(windows.begin(), windows.end(), rng);
  const auto b = mean_tensor(windows);
  const auto va = a.values().values(), vb = b.values().values();
  for (std::size_t i = 0; i < va.size(); ++i) CHECK(std::abs(va[i] - vb[i]) <= 1e-9);
}

TEST_CASE("latent distances") {
  EmbeddingPrior prior{{1.0, 1.0}};
  std::vector<EmbeddingRecord> records{{{4.0, 5.0}, Split::Train, {}},
                                       {{1.0, 1.0}, Split::ValidationAnomalous, {}}};
  const auto d = latent_distances(records, prior);
  CHECK(d.size() == 3);
  CHECK(d.at(Split::Train).values == std::vector<double>{5.0});
  CHECK(d.at(Split::ValidationNormal).values.empty());
  CHECK(d.at(Split::ValidationAnomalous).values == std::vector<double>{0.0});
  CHECK(d.at(Split::Train).tag == "latent");
  records.push_back({{1.0}, Split::Train, {}});
  CHECK_THROWS_AS(latent_distances(records, prior), std::invalid_argument);
}

TEST_CASE("serialization") {
  const SdomReport rep(0.25, 1.5, FeatureType::AbsoluteTrajectory, {4, 5, 6});
  const auto doc = nlohmann::json::parse(sdom_report_to_json(rep));
  CHECK(doc["feature_type"] == "traj");  // short name, as in the report
  CHECK(doc["sdom"].get<double>() == 1.25);
  CHECK(doc["counts"]["val_anomalous"] == 6);

  std::vector<DistanceSeries> series{{{0.5, 2.0}, Split::Train, "pose"},
                                     {{3.25}, Split::ValidationAnomalous, "pose"}};
  CHECK(distance_series_to_csv(series) ==
        "index,split,distance\n0,train,0.5\n1,train,2\n0,val_anomalous,3.25\n");
}

TEST_CASE("mean and delta examples") {
  std::mt19937_64 rng(6);
  const auto w = oracle::random_window(rng, 5, 3);
  std::vector<FeatureWindow> one{w};
  CHECK(mean_tensor(one).values() == w.coords());
  CoordTensor neg = w.coords();
  for (auto& v : neg.values()) v = -v;
  std::vector<FeatureWindow> pair{w, FeatureWindow::dense(neg, "v", 0, {0}, Label::Normal,
                                                          Split::Train)};
  const auto zero = mean_tensor(pair);
  for (double v : zero.values().values()) CHECK(v == 0.0);

  CoordTensor a(24, 1), b(24, 1);
  b.at(7, 0, 0) = 24.0;
  CHECK(delta(MeanTensor(a, 1), MeanTensor(b, 1)) == 1.0);
  CHECK(delta(MeanTensor(b, 1), MeanTensor(b, 1)) == 0.0);

  std::vector<FeatureWindow> single{FeatureWindow::dense(b, "v", 0, {0}, Label::Normal,
                                                         Split::Train)};
  CHECK(distances_to_mean(single, MeanTensor(a, 1)).values == std::vector<double>{24.0});
  CHECK(distances_to_mean(single, MeanTensor(b, 1)).values == std::vector<double>{0.0});
  CHECK_THROWS_AS(distances_to_mean(single, MeanTensor(CoordTensor(2, 1), 1)),
                  std::invalid_argument);

  for (int i = 0; i < 100; ++i) {
    const MeanTensor x(oracle::random_window(rng, 6, 4).coords(), 1);
    const MeanTensor y(oracle::random_window(rng, 6, 4).coords(), 1);
    const MeanTensor z(oracle::random_window(rng, 6, 4).coords(), 1);
    CHECK(delta(x, y) == delta(y, x));
    CHECK(delta(x, z) <= delta(x, y) + delta(y, z) + 1e-12);
    CHECK(std::abs(delta(x, y) - oracle::brute_norm_diff(x.values().values(), y.values().values()) / 6.0) <
          1e-12 * std::max(1.0, delta(x, y)));
  }
}

TEST_CASE("S-DoM is translation invariant and scale equivariant") {
  std::mt19937_64 rng(7);
  auto train = random_windows(rng, 30, 8, 4, Split::Train);
  auto vn = random_windows(rng, 30, 8, 4, Split::ValidationNormal);
  auto va = random_windows(rng, 30, 8, 4, Split::ValidationAnomalous, 600.0);
  const auto base = sdom_report(train, vn, va, FeatureType::Pose);
  auto transform = [](std::vector<FeatureWindow> ws, double scale, double sx, double sy) {
    for (auto& w : ws) {
      CoordTensor c = w.coords();
      for (std::size_t e = 0; e < c.size(); ++e) c.values()[e] = c.values()[e] * scale + (e % 2 ? sy : sx);
      w = FeatureWindow::dense(c, "v", 0, {0}, w.label(), w.split());
    }
    return ws;
  };
  const auto shifted = sdom_report(transform(train, 1, 123.5, -88), transform(vn, 1, 123.5, -88),
                                   transform(va, 1, 123.5, -88), FeatureType::Pose);
  CHECK(std::abs(shifted.delta_n() - base.delta_n()) < 1e-9);
  CHECK(std::abs(shifted.delta_a() - base.delta_a()) < 1e-9);
  CHECK(std::abs(shifted.sdom() - base.sdom()) < 1e-9);
  const double s = 3.7;
  const auto scaled = sdom_report(transform(train, s, 0, 0), transform(vn, s, 0, 0),
                                  transform(va, s, 0, 0), FeatureType::Pose);
  CHECK(std::abs(scaled.delta_n() - s * base.delta_n()) <= 1e-9 * s * base.delta_n());
  CHECK(std::abs(scaled.delta_a() - s * base.delta_a()) <= 1e-9 * s * base.delta_a());
  CHECK(std::abs(scaled.sdom() - s * base.sdom()) <= 1e-9 * std::abs(s * base.sdom()));
}
