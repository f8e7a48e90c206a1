#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "skeldiff/skeldiff.hpp"

using namespace skeldiff;

namespace {

std::vector<FeatureWindow> random_pose_windows(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(0.0, 800.0);
  std::vector<FeatureWindow> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> values(24 * 17 * 2);
    for (auto& v : values) v = coord(rng);
    const auto split = i % 2 == 0 ? Split::Train
                       : i % 4 == 1 ? Split::ValidationNormal
                                    : Split::ValidationAnomalous;
    out.push_back(FeatureWindow::dense(CoordTensor(24, 17, std::move(values)), "v",
                                       static_cast<FrameIndex>(i), {0},
                                       split == Split::ValidationAnomalous ? Label::Anomalous
                                                                           : Label::Normal,
                                       split));
  }
  return out;
}

std::vector<ScoredFrame> random_scores(std::size_t n) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<ScoredFrame> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].video_id = "v";
    out[i].frame_index = static_cast<FrameIndex>(i);
    out[i].label = i % 3 == 0 ? Label::Anomalous : Label::Normal;
    out[i].score = noise(rng) + (out[i].label == Label::Anomalous ? 1.0 : 0.0);
  }
  return out;
}

}  // namespace

static void BM_SdomReport(benchmark::State& state) {
  const auto windows = random_pose_windows(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sdom_report(windows, FeatureType::Pose).sdom());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SdomReport)->Arg(1000)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

static void BM_DistancesToMean(benchmark::State& state) {
  const auto windows = random_pose_windows(static_cast<std::size_t>(state.range(0)), 2);
  const auto mu = mean_tensor(windows);
  for (auto _ : state) {
    benchmark::DoNotOptimize(distances_to_mean(windows, mu).values.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DistancesToMean)->Arg(1000)->Arg(100000)->Unit(benchmark::kMillisecond);

static void BM_Evaluate(benchmark::State& state) {
  const auto scores = random_scores(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate(scores, Averaging::Concatenate).auc_roc);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Evaluate)->RangeMultiplier(10)->Range(1000, 1000000)->Complexity(benchmark::oNLogN);

static void BM_BuildPoseWindows(benchmark::State& state) {
  SynthSpec spec;
  spec.n_videos = 16;
  spec.train_videos = 8;
  spec.seed = 9;
  const auto bundle = generate(spec);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        build_windows(bundle, FeatureType::Pose, CenterPolicy::FirstPoseToFrameCenter).windows.size());
  }
}
BENCHMARK(BM_BuildPoseWindows)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
