#include <random>

#include <benchmark/benchmark.h>

#include "pinning/conditions.hpp"
#include "pinning/linalg.hpp"

namespace {

pinning::Matrix random_symmetric_coupling(int m) {
  std::mt19937_64 rng(static_cast<std::uint64_t>(m));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  pinning::Matrix a = pinning::Matrix::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) a(i, j) = a(j, i) = unit(rng) < 0.3 ? unit(rng) : 0.0;
  }
  for (int i = 0; i < m; ++i) a(i, i) = -(a.row(i).sum() - a(i, i));
  return a;
}

void BM_SymEigen(benchmark::State& state) {
  const auto a = random_symmetric_coupling(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(pinning::sym_eigen(a));
}
BENCHMARK(BM_SymEigen)->RangeMultiplier(2)->Range(4, 64);

void BM_SccCondensation(benchmark::State& state) {
  const auto a = random_symmetric_coupling(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(pinning::scc_condensation(a));
}
BENCHMARK(BM_SccCondensation)->RangeMultiplier(4)->Range(4, 256);

void BM_QuadSampled(benchmark::State& state) {
  const pinning::QuadCertificate cert{pinning::Vector::Ones(3), pinning::Vector::Constant(3, 10.0),
                                      0.6218};
  const auto chua = pinning::Dynamics::chua();
  const auto box = pinning::StateBox::cube(3, 30.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pinning::quad_check_sampled(chua, cert, box, 10000, 1));
  }
}
BENCHMARK(BM_QuadSampled);

}  // namespace
