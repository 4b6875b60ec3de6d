#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "hcshape/bottleneck.hpp"
#include "hcshape/forest.hpp"
#include "hcshape/hclust.hpp"
#include "hcshape/persistence.hpp"

namespace {

hcshape::PointCloud cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 27.0);
  hcshape::PointCloud out(n);
  for (auto& p : out) p = {u(rng), u(rng)};
  return out;
}

hcshape::ClusteringDiagram diagram(std::size_t n, std::uint64_t seed) {
  return hcshape::clustering_diagram(
      hcshape::linkage(hcshape::pairwise_distances(cloud(n, seed)), hcshape::Linkage::Single));
}

void BM_Bottleneck(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = diagram(n, 1), b = diagram(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(hcshape::bottleneck_distance(a, b));
}
BENCHMARK(BM_Bottleneck)->Arg(10)->Arg(50)->Arg(200);

void BM_Linkage(benchmark::State& state) {
  const auto dm = hcshape::pairwise_distances(cloud(static_cast<std::size_t>(state.range(0)), 3));
  const auto method = static_cast<hcshape::Linkage>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(hcshape::linkage(dm, method));
}
BENCHMARK(BM_Linkage)->ArgsProduct({{50, 150}, {0, 1, 2, 3}});

void BM_RipsDim1(benchmark::State& state) {
  const auto dm = hcshape::pairwise_distances(cloud(static_cast<std::size_t>(state.range(0)), 4));
  for (auto _ : state) benchmark::DoNotOptimize(hcshape::rips_dim1(dm));
}
BENCHMARK(BM_RipsDim1)->Arg(30)->Arg(60)->Arg(120)->Unit(benchmark::kMillisecond);

void BM_ForestTrain(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  hcshape::DenseMatrix x{500, 50, {}};
  std::vector<double> y(x.rows);
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t c = 0; c < x.cols; ++c) x.values.push_back(g(rng));
    y[r] = double(r % 10);
  }
  hcshape::ForestParams params;
  params.n_trees = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(hcshape::RandomForest::train(x, y, hcshape::ForestMode::Classify, params));
  }
}
BENCHMARK(BM_ForestTrain)->Arg(20)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
