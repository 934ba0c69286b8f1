// Model costs on synthetic 225-dimensional turn vectors.

#include <benchmark/benchmark.h>

#include "turnprint/classify.hpp"
#include "turnprint/enroll.hpp"
#include "turnprint/rng.hpp"

using namespace turnprint;

namespace {

std::vector<classify::Sample> blobs(std::size_t classes, std::size_t per_class) {
  Rng rng(11);
  std::vector<classify::Sample> out;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      classify::Sample s{std::vector<double>(225), "d" + std::to_string(c)};
      for (double& x : s.features) x = 0.3 * static_cast<double>(c) + rng.normal(0.0, 1.0);
      out.push_back(std::move(s));
    }
  }
  return out;
}

void BM_RandomForestTrain(benchmark::State& state) {
  const auto data = blobs(static_cast<std::size_t>(state.range(0)), 50);
  for (auto _ : state) benchmark::DoNotOptimize(classify::train(data, classify::ModelKind::RandomForest, 1));
}
BENCHMARK(BM_RandomForestTrain)->Arg(5)->Arg(12)->ArgName("drivers")->Unit(benchmark::kMillisecond);

void BM_RandomForestPredict(benchmark::State& state) {
  const auto data = blobs(12, 50);
  const auto model = classify::train(data, classify::ModelKind::RandomForest, 1);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(classify::predict_turn(model, data[i++ % data.size()].features));
}
BENCHMARK(BM_RandomForestPredict)->Unit(benchmark::kMicrosecond);

void BM_NaiveBayesTrip(benchmark::State& state) {
  const auto data = blobs(12, 50);
  const auto nb = classify::GaussianNaiveBayes::fit(data);
  std::vector<std::vector<double>> trip;
  for (std::size_t i = 0; i < 8; ++i) trip.push_back(data[i].features);
  for (auto _ : state) benchmark::DoNotOptimize(classify::predict_trip_map(nb, trip));
}
BENCHMARK(BM_NaiveBayesTrip)->Unit(benchmark::kMicrosecond);

void BM_GmmFit(benchmark::State& state) {
  const auto data = blobs(1, static_cast<std::size_t>(state.range(0)));
  std::vector<std::vector<double>> v;
  for (const auto& s : data) v.push_back(s.features);
  for (auto _ : state) benchmark::DoNotOptimize(enroll::fit_gmm(v, 2, 5));
}
BENCHMARK(BM_GmmFit)->Arg(24)->Arg(96)->ArgName("vectors")->Unit(benchmark::kMillisecond);

}  // namespace
