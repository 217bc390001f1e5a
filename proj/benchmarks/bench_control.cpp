#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "crossway/control.hpp"
#include "crossway/rng.hpp"

using namespace crossway;

namespace {

neighbor_view make_view(int n, det_rng& rng) {
  neighbor_view view;
  for (int k = 0; k < n; ++k) {
    neighbor_sample s;
    s.vehicle_id = "v" + std::to_string(k + 2);
    s.progress_m = rng.uniform01() * 100.0 - 50.0;
    s.speed_mps = rng.uniform01() * 20.0;
    s.desired_gap_m = 14.0 * (k + 1);
    view.push_back(std::move(s));
  }
  return view;
}

void bm_sig(benchmark::State& state) {
  double x = 0.0;
  for (auto _ : state) {
    x += 1e-9;
    benchmark::DoNotOptimize(sig(x - 1.0, 0.5));
  }
}
BENCHMARK(bm_sig);

void bm_control_input(benchmark::State& state) {
  det_rng rng(7);
  const neighbor_view view = make_view(static_cast<int>(state.range(0)), rng);
  const vehicle_state self{-40.0, 9.5, 0.0};
  const controller_params params{0.5};
  for (auto _ : state) {
    benchmark::DoNotOptimize(control_input(self, view, params));
  }
}
BENCHMARK(bm_control_input)->Arg(1)->Arg(2)->Arg(4)->Arg(8);

void bm_lyapunov_value(benchmark::State& state) {
  det_rng rng(7);
  const int pairs = static_cast<int>(state.range(0));
  std::vector<pair_error> errors;
  std::vector<double> speeds;
  for (int k = 0; k < pairs; ++k) {
    errors.push_back({rng.uniform01() * 10.0 - 5.0, 1.0});
    errors.push_back({-errors.back().error_m, 1.0});
  }
  for (int k = 0; k <= pairs; ++k) {
    speeds.push_back(rng.uniform01() * 4.0 - 2.0);
  }
  const controller_params params{0.5};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        lyapunov_value(errors, speeds, params, spacing_mode::constant_gap));
  }
}
BENCHMARK(bm_lyapunov_value)->Arg(2)->Arg(6);

}  // namespace

BENCHMARK_MAIN();
