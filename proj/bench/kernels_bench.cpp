// Serial reference vs OpenMP kernels and perft. Run with OMP_NUM_THREADS to
// vary the thread count of the parallel variants.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "mchess/kernels.hpp"
#include "mchess/perft.hpp"
#include "mchess/variant.hpp"

namespace {

using namespace mchess;

std::vector<float> random_vector(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Square gemm of side n.
void BM_GemmReference(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto a = random_vector(std::size_t(n) * n, 1), b = random_vector(std::size_t(n) * n, 2);
  std::vector<float> c(std::size_t(n) * n);
  for (auto _ : state) {
    kernels::reference::gemm(false, false, n, n, n, a.data(), b.data(), c.data());
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * 2LL * n * n * n);
}

void BM_GemmParallel(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto a = random_vector(std::size_t(n) * n, 1), b = random_vector(std::size_t(n) * n, 2);
  std::vector<float> c(std::size_t(n) * n);
  for (auto _ : state) {
    kernels::gemm(false, false, n, n, n, a.data(), b.data(), c.data());
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * 2LL * n * n * n);
}

// 3x3 convolution on a batch of 64 boards of 8x8 with range(0) channels in and out.
constexpr int kBatch = 64, kSide = 8;

void BM_ConvReference(benchmark::State& state) {
  const int ch = static_cast<int>(state.range(0));
  const auto x = random_vector(std::size_t(ch) * kBatch * kSide * kSide, 3);
  const auto w = random_vector(std::size_t(ch) * ch * 9, 4);
  std::vector<float> y(std::size_t(ch) * kBatch * kSide * kSide);
  for (auto _ : state) {
    kernels::reference::conv3x3(x.data(), w.data(), ch, ch, kBatch, kSide, kSide, y.data());
    benchmark::DoNotOptimize(y.data());
  }
}

void BM_ConvParallel(benchmark::State& state) {
  const int ch = static_cast<int>(state.range(0));
  const auto x = random_vector(std::size_t(ch) * kBatch * kSide * kSide, 3);
  const auto w = random_vector(std::size_t(ch) * ch * 9, 4);
  std::vector<float> y(std::size_t(ch) * kBatch * kSide * kSide);
  std::vector<float> cols(std::size_t(ch) * 9 * kBatch * kSide * kSide);
  for (auto _ : state) {
    kernels::conv3x3(x.data(), w.data(), ch, ch, kBatch, kSide, kSide, cols.data(), y.data());
    benchmark::DoNotOptimize(y.data());
  }
}

void BM_PerftSerial(benchmark::State& state) {
  const Position start = Position::initial(Rules::make(load_variant("standard8x8")));
  for (auto _ : state) benchmark::DoNotOptimize(perft(start, static_cast<int>(state.range(0))));
}

void BM_PerftParallel(benchmark::State& state) {
  const Position start = Position::initial(Rules::make(load_variant("standard8x8")));
  for (auto _ : state) benchmark::DoNotOptimize(perft_parallel(start, static_cast<int>(state.range(0))));
}

BENCHMARK(BM_GemmReference)->Arg(64)->Arg(256);
BENCHMARK(BM_GemmParallel)->Arg(64)->Arg(256);
BENCHMARK(BM_ConvReference)->Arg(16)->Arg(64);
BENCHMARK(BM_ConvParallel)->Arg(16)->Arg(64);
BENCHMARK(BM_PerftSerial)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PerftParallel)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
