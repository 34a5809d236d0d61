// Serial reference vs OpenMP for the per-sample kernels. Arg 0 runs the
// serial path, arg 1 the parallel one.

#include "modalkin/estimation.hpp"
#include "modalkin/kernels.hpp"
#include "modalkin/simulation.hpp"
#include "test_support.hpp"

#include <benchmark/benchmark.h>

using namespace modalkin;

namespace {

Exec exec_of(const benchmark::State& state) {
  return state.range(0) == 0 ? Exec::Serial : Exec::Parallel;
}

const ModalModel& model() { return modalkin::testing::bellow_model(); }

void BM_FreeCentrode(benchmark::State& state) {
  const auto pressures = Ramp(5.0, 20.0, 0.005).values();
  for (auto _ : state) {
    benchmark::DoNotOptimize(free_centrode(model(), pressures, 0.005, exec_of(state)));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pressures.size()));
}

void BM_ContactCentrode(benchmark::State& state) {
  const auto pressures = Ramp(5.0, 20.0, 0.005).values();
  const ContactState c = freeze(model(), 5.0, 100.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(contact_centrode(model(), c, pressures, 0.005, exec_of(state)));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pressures.size()));
}

void BM_IsaSweep(benchmark::State& state) {
  const Ramp ramp(5.0, 20.0, 0.05);
  std::vector<double> locations;
  for (int s = 0; s <= 400; s += 10) locations.push_back(s);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        isa_sweep(model(), ramp, locations, DistalBlend::OnsetPreserving, exec_of(state)));
  }
}

void BM_ObjectiveGrid(benchmark::State& state) {
  EstimationProblem p;
  p.model = model();
  p.ramp = Ramp(5.0, 20.0, 0.05);
  p.sensed = centrode_from_stream(simulate_stream(p.model, p.ramp, ContactSpec{100.0, 5.0}));
  p.s0 = 200.0;
  std::vector<double> grid;
  for (int s = 20; s <= 420; s += 4) grid.push_back(s);
  for (auto _ : state) {
    benchmark::DoNotOptimize(objective_grid(p, grid, exec_of(state)));
  }
}

}  // namespace

BENCHMARK(BM_FreeCentrode)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ContactCentrode)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_IsaSweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ObjectiveGrid)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
