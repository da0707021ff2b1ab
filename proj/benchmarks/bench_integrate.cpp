#include <benchmark/benchmark.h>

#include "pinning/scenario.hpp"
#include "pinning/simulate.hpp"

namespace {

void BM_IntegrateFig4(benchmark::State& state) {
  const auto cfg = pinning::parse_scenario("fig4-sym-pinned");
  const auto sys = pinning::build_system(cfg);
  const double t_max = static_cast<double>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        pinning::integrate(sys, cfg.initial_states, cfg.reference_initial, 1e-3, t_max));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(t_max * 1000.0));
}
BENCHMARK(BM_IntegrateFig4)->Arg(1)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_RhsNonlinear(benchmark::State& state) {
  const auto cfg = pinning::parse_scenario("nonlinear-pinned");
  const auto sys = pinning::build_system(cfg);
  pinning::StateMatrix out;
  for (auto _ : state) {
    pinning::system_rhs(sys, cfg.initial_states, cfg.reference_initial, 0.0, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_RhsNonlinear);

}  // namespace
