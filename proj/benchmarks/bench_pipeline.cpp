// Per-trip costs: alignment + turn extraction, and feature construction.

#include <benchmark/benchmark.h>

#include "turnprint/features.hpp"
#include "turnprint/simgen.hpp"
#include "turnprint/turns.hpp"

using namespace turnprint;

namespace {

simgen::SimulatedTrip sample_trip(bool mounted) {
  simgen::SensorModel sensor;
  if (mounted) sensor.mount_rpy_deg = Vec3{4.0, -8.0, 35.0};
  return simgen::generate_trip(simgen::DriverProfile{}, simgen::random_route(simgen::RouteStyle{}, 3), 0.01, 3,
                               sensor);
}

void BM_GenerateTrip(benchmark::State& state) {
  const auto route = simgen::random_route(simgen::RouteStyle{}, 3);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simgen::generate_trip(simgen::DriverProfile{}, route, 0.01, ++seed));
  }
}
BENCHMARK(BM_GenerateTrip)->Unit(benchmark::kMillisecond);

void BM_ExtractTurns(benchmark::State& state) {
  const auto trip = sample_trip(state.range(0) != 0);
  for (auto _ : state) benchmark::DoNotOptimize(turns::extract_turns(trip.trace));
  state.counters["samples"] = static_cast<double>(trip.trace.samples.size());
}
BENCHMARK(BM_ExtractTurns)->Arg(0)->Arg(1)->ArgName("mounted")->Unit(benchmark::kMillisecond);

void BM_FeatureVector(benchmark::State& state) {
  const auto ex = turns::extract_turns(sample_trip(false).trace);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(features::build_feature_vector(ex.turns[i++ % ex.turns.size()]));
  }
}
BENCHMARK(BM_FeatureVector)->Unit(benchmark::kMicrosecond);

}  // namespace
