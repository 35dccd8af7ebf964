#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "sentops/cluster.hpp"
#include "sentops/corpus.hpp"
#include "sentops/metrics.hpp"
#include "sentops/pattern.hpp"
#include "sentops/random.hpp"
#include "sentops/tsne.hpp"

namespace {

using namespace sentops;

Matrix gaussian(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(n, dim);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

std::vector<int> labels(std::size_t n, int classes, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> out(n);
  for (int& l : out) l = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
  return out;
}

void BM_ExtractPattern(benchmark::State& state) {
  const auto premise = tokenize("A man with a tattoo behind his ear is playing a guitar on a busy street corner.");
  const auto hypothesis = tokenize("A woman with a tattoo behind her ear is playing a guitar on a quiet street.");
  for (auto _ : state) benchmark::DoNotOptimize(extract_with_bindings(premise, hypothesis));
}
BENCHMARK(BM_ExtractPattern);

void BM_Tokenize(benchmark::State& state) {
  const std::string text = "Two young children in blue jerseys, one with the number 9 and one with the number 2, "
                           "aren't standing on wooden steps in a bathroom and washing their hands in a sink.";
  for (auto _ : state) benchmark::DoNotOptimize(tokenize(text));
}
BENCHMARK(BM_Tokenize);

void BM_KMeansSingle(benchmark::State& state) {
  const auto points = gaussian(static_cast<std::size_t>(state.range(0)), 64, 1);
  for (auto _ : state) benchmark::DoNotOptimize(kmeans_single(points, 60, 300, 1e-6, 7));
}
BENCHMARK(BM_KMeansSingle)->Arg(1000)->Arg(4200)->Unit(benchmark::kMillisecond);

void BM_AdjustedMutualInformation(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto t = labels(n, 60, 1);
  const auto p = labels(n, 60, 2);
  for (auto _ : state) benchmark::DoNotOptimize(adjusted_mutual_information(t, p));
}
BENCHMARK(BM_AdjustedMutualInformation)->Arg(1000)->Arg(4200)->Unit(benchmark::kMillisecond);

void BM_Silhouette(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto points = gaussian(n, 64, 3);
  const auto assignment = labels(n, 9, 4);
  for (auto _ : state) benchmark::DoNotOptimize(silhouette(points, assignment, 1));
}
BENCHMARK(BM_Silhouette)->Arg(1000)->Arg(3000)->Unit(benchmark::kMillisecond);

void BM_TsneIterations(benchmark::State& state) {
  const auto points = gaussian(static_cast<std::size_t>(state.range(0)), 64, 5);
  TsneConfig config;
  config.iterations = 50;
  config.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(tsne(points, config));
}
BENCHMARK(BM_TsneIterations)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
