#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "crossway/dynamics.hpp"
#include "crossway/rng.hpp"
#include "crossway/topology.hpp"

using namespace crossway;

namespace {

fleet_state make_fleet(int n, det_rng& rng) {
  fleet_state fleet;
  for (int k = 0; k < n; ++k) {
    fleet.vehicles.push_back(
        {-20.0 * k + rng.uniform01(), 9.0 + rng.uniform01(), 0.0});
  }
  return fleet;
}

void bm_step(benchmark::State& state) {
  det_rng rng(3);
  const int n = static_cast<int>(state.range(0));
  fleet_state fleet = make_fleet(n, rng);
  const std::vector<double> inputs(n, 0.25);
  sim_config cfg;
  cfg.dt_s = 0.01;
  for (auto _ : state) {
    fleet = step(fleet, inputs, cfg);
    benchmark::DoNotOptimize(fleet.vehicles.back().progress_m);
  }
}
BENCHMARK(bm_step)->Arg(3)->Arg(10)->Arg(50);

void bm_step_rk4(benchmark::State& state) {
  det_rng rng(3);
  const int n = static_cast<int>(state.range(0));
  fleet_state fleet = make_fleet(n, rng);
  const std::vector<double> inputs(n, 0.25);
  sim_config cfg;
  cfg.dt_s = 0.01;
  cfg.integrator = integrator_kind::rk4;
  for (auto _ : state) {
    fleet = step(fleet, inputs, cfg);
    benchmark::DoNotOptimize(fleet.vehicles.back().progress_m);
  }
}
BENCHMARK(bm_step_rk4)->Arg(3)->Arg(10);

// Whole-run cost: one second of a three-vehicle chain at 100 Hz.
void bm_closed_loop_second(benchmark::State& state) {
  closed_loop_setup setup;
  setup.ids = {"v1", "v2", "v3"};
  setup.p0_m = {-2.0, -16.5, -29.0};
  setup.v0_mps = {10.5, 10.0, 9.5};
  setup.length_m = {4.6, 4.6, 4.6};
  setup.params.alpha = 0.5;
  setup.spacing.standstill_gap_m = 10.0;
  setup.spacing.headway_s = 0.5;
  setup.spacing.mode = spacing_mode::constant_gap;
  setup.spacing.reference_speed_mps = 10.0;
  setup.graph = chain_graph(3);
  sim_config cfg;
  cfg.dt_s = 0.01;
  cfg.duration_s = 1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_closed_loop(setup, cfg));
  }
}
BENCHMARK(bm_closed_loop_second);

}  // namespace

BENCHMARK_MAIN();
