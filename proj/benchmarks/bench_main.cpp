#include <random>

#include <benchmark/benchmark.h>

#include "pgmseg/inference.hpp"
#include "pgmseg/pipeline.hpp"

using namespace pgmseg;

namespace {

// Noisy rectangle on a flat background plus the box 5 px around it.
struct Scene {
  LabImage image;
  BoundingBox box;
};

Scene rectangle_scene(int width, int height) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> noise(0.0, 2.0);
  Scene s;
  s.image.size = {width, height};
  const BoundingBox rect{width / 4, height / 4, width / 2, height / 2};
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Lab base = rect.contains(x, y) ? Lab(70, 30, 10) : Lab(35, -20, -25);
      s.image.pixels.push_back(base + Lab(noise(rng), noise(rng), noise(rng)));
    }
  }
  s.box = {rect.x - 5, rect.y - 5, rect.width + 10, rect.height + 10};
  return s;
}

GaussianModel random_gaussian(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::Matrix3d a;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) a(r, c) = u(rng);
  }
  return GaussianModel(Eigen::Vector3d(50 * u(rng), 50 * u(rng), 50 * u(rng)),
                       a * a.transpose() + 0.1 * Eigen::Matrix3d::Identity());
}

void BM_SymmetricKl(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const auto a = random_gaussian(rng);
  const auto b = random_gaussian(rng);
  for (auto _ : state) benchmark::DoNotOptimize(symmetric_kl(a, b));
}
BENCHMARK(BM_SymmetricKl);

void BM_FitGmm(benchmark::State& state) {
  const auto s = rectangle_scene(120, 90);
  for (auto _ : state) benchmark::DoNotOptimize(fit_gmm(s.image.pixels, 3, 0));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.image.pixels.size()));
}
BENCHMARK(BM_FitGmm)->Unit(benchmark::kMillisecond);

void BM_Watershed(benchmark::State& state) {
  const auto s = rectangle_scene(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)) * 3 / 4);
  for (auto _ : state) benchmark::DoNotOptimize(watershed_partition(s.image, 0));
}
BENCHMARK(BM_Watershed)->Arg(160)->Arg(320)->Unit(benchmark::kMillisecond);

void BM_PowerIteration(benchmark::State& state) {
  const auto s = rectangle_scene(320, 240);
  const SegConfig cfg;
  const auto tm = trimap_from_bbox(s.image.size, s.box);
  const auto g = build_superpixel_graph(s.image, tm, cfg, 0);
  const auto st = init_models(g, s.image, tm, cfg);
  const auto pairs = pairwise_probabilities(g.size(), g.edges, st.bandwidths);
  const auto m = assemble_assignment_matrix(pairs, current_unary(st, g), cfg.lambda);
  for (auto _ : state) benchmark::DoNotOptimize(leading_eigenvector(m));
  state.counters["superpixels"] = g.size();
}
BENCHMARK(BM_PowerIteration)->Unit(benchmark::kMicrosecond);

void BM_RunSegmentation(benchmark::State& state) {
  const auto s = rectangle_scene(120, 90);
  const auto tm = trimap_from_bbox(s.image.size, s.box);
  const SegConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(run_segmentation(s.image, tm, cfg, 0));
}
BENCHMARK(BM_RunSegmentation)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
