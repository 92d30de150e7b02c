// Serial reference kernels against their OpenMP and FFT counterparts.
#include <benchmark/benchmark.h>

#include <numbers>
#include <random>

#include "cloakopt/optimizer/design.hpp"
#include "cloakopt/vie/interaction.hpp"
#include "cloakopt/vie/solver.hpp"

using namespace cloakopt;

namespace {

constexpr double kK = 2.0 * std::numbers::pi;

std::vector<vie::cplx> random_polarization(std::size_t n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  std::vector<vie::cplx> p(3 * n);
  for (auto& v : p) v = {nd(rng), nd(rng)};
  return p;
}

vie::PermittivityGrid random_grid(int n) {
  auto g = vie::PermittivityGrid::centered({n, n, n}, 1.0 / 16.0);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(1.0, 9.0);
  for (auto& e : g.eps) e = u(rng);
  return g;
}

void BM_interaction_direct_serial(benchmark::State& state) {
  const vie::Lattice lat{{int(state.range(0)), int(state.range(0)), int(state.range(0))}, 1.0 / 16.0};
  const auto p = random_polarization(lat.size());
  std::vector<vie::cplx> out(p.size());
  for (auto _ : state) {
    vie::interaction_direct_serial(lat, kK, p, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_interaction_direct_omp(benchmark::State& state) {
  const vie::Lattice lat{{int(state.range(0)), int(state.range(0)), int(state.range(0))}, 1.0 / 16.0};
  const auto p = random_polarization(lat.size());
  std::vector<vie::cplx> out(p.size());
  for (auto _ : state) {
    vie::interaction_direct_omp(lat, kK, p, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_interaction_fft(benchmark::State& state) {
  const vie::Lattice lat{{int(state.range(0)), int(state.range(0)), int(state.range(0))}, 1.0 / 16.0};
  const auto p = random_polarization(lat.size());
  std::vector<vie::cplx> out(p.size());
  const vie::FftInteraction fft(lat, kK);
  for (auto _ : state) {
    fft.apply(p, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_assemble_dense_serial(benchmark::State& state) {
  const auto g = random_grid(int(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(vie::assemble_dense_serial(g, kK));
}

void BM_assemble_dense_omp(benchmark::State& state) {
  const auto g = random_grid(int(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(vie::assemble_dense(g, kK));
}

void sweep_bench(benchmark::State& state, optimizer::SweepMode mode) {
  const auto grid = vie::PermittivityGrid::centered({8, 8, 8}, 1.0 / 16.0);
  const auto emitters = optimizer::Emitters::on_z_axis(0.25);
  optimizer::DesignConfig cfg;
  cfg.sweep_mode = mode;
  const auto pair = vie::scattered_green_pair(grid, emitters.r1, emitters.r2, kK);
  for (auto _ : state) {
    benchmark::DoNotOptimize(optimizer::sweep_once(grid, cfg, pair, emitters, kK, 0.05));
  }
}

void BM_sweep_sequential(benchmark::State& state) { sweep_bench(state, optimizer::SweepMode::sequential); }
void BM_sweep_frozen_reference(benchmark::State& state) {
  sweep_bench(state, optimizer::SweepMode::frozen_reference);
}

}  // namespace

BENCHMARK(BM_interaction_direct_serial)->DenseRange(4, 12, 4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_interaction_direct_omp)->DenseRange(4, 12, 4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_interaction_fft)->DenseRange(4, 12, 4)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_assemble_dense_serial)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_assemble_dense_omp)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sweep_sequential)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sweep_frozen_reference)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
