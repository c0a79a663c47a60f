#include "brakeorbit/distance.hpp"
#include "brakeorbit/jacobi_geodesic.hpp"
#include "brakeorbit/morse.hpp"
#include "brakeorbit/potentials.hpp"

#include <benchmark/benchmark.h>

#include <numbers>

using namespace brakeorbit;

namespace {

Vec point(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

const double kArc = 0.9 * std::numbers::pi / 4;

void BM_BoundaryStartGeodesic(benchmark::State& state) {
  const auto sys = make_harmonic(2, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(boundary_start(sys, point(1, 0), kArc));
}
BENCHMARK(BM_BoundaryStartGeodesic)->Unit(benchmark::kMillisecond);

void BM_AssembleIndexForm(benchmark::State& state) {
  const auto sys = make_harmonic(2, 0.5);
  const auto geo = boundary_start(sys, point(1, 0), kArc);
  const int cells = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(assemble_index_form(sys, geo, 0.5, {cells}));
}
BENCHMARK(BM_AssembleIndexForm)->Arg(80)->Arg(160)->Arg(320)->Unit(benchmark::kMillisecond);

void BM_MorseIndex(benchmark::State& state) {
  const auto sys = make_harmonic(2, 0.5);
  const auto geo = boundary_start(sys, point(1, 0), kArc);
  const auto disc = assemble_index_form(sys, geo, 0.5, {static_cast<int>(state.range(0))});
  for (auto _ : state) benchmark::DoNotOptimize(morse_index(disc));
}
BENCHMARK(BM_MorseIndex)->Arg(80)->Arg(160)->Arg(320)->Unit(benchmark::kMillisecond);

void BM_Distance(benchmark::State& state) {
  const auto sys = make_harmonic(2, 0.5);
  const auto backend = static_cast<DistanceBackend>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(distance(sys, point(0.5, 0.2), backend));
  state.SetLabel(to_string(backend));
}
BENCHMARK(BM_Distance)
    ->Arg(static_cast<int>(DistanceBackend::variational))
    ->Arg(static_cast<int>(DistanceBackend::shooting))
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
