#include <benchmark/benchmark.h>

#include <optional>
#include <string>

#include "crossway/protocol.hpp"

using namespace crossway;

namespace {

status_message sample_status(int k) {
  status_message m;
  m.vehicle_name = "vehicle_" + std::to_string(k);
  m.gnss_lat = 57.70887 + k * 1e-5;
  m.gnss_lon = 11.97456 + k * 1e-5;
  m.gnss_heading = 184.2;
  m.speed_lat = 0.1;
  m.speed_lon = 9.8;
  m.proximity_m = -120.5 + k;
  m.latency_ms = 12.0;
  m.local_timestamp_ms = 1723600000000 + k;
  m.local_sequence = 1000 + static_cast<std::uint64_t>(k);
  return m;
}

traffic_update sample_update(int vehicles) {
  traffic_update u;
  u.connected_nodes = vehicles;
  u.global_sequence = 424242;
  u.global_timestamp_ms = 1723600000123;
  for (int k = 0; k < vehicles; ++k) u.vehicles.push_back(sample_status(k));
  return u;
}

void bm_encode_status(benchmark::State& state) {
  const status_message m = sample_status(1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(encode(m));
  }
}
BENCHMARK(bm_encode_status);

void bm_decode_status(benchmark::State& state) {
  const std::string bytes = encode(sample_status(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(decode_status(bytes));
  }
}
BENCHMARK(bm_decode_status);

void bm_encode_update(benchmark::State& state) {
  const traffic_update u = sample_update(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(encode(u));
  }
}
BENCHMARK(bm_encode_update)->Arg(3)->Arg(10);

void bm_decode_update(benchmark::State& state) {
  const std::string bytes = encode(sample_update(static_cast<int>(state.range(0))));
  for (auto _ : state) {
    benchmark::DoNotOptimize(decode_update(bytes));
  }
}
BENCHMARK(bm_decode_update)->Arg(3)->Arg(10);

void bm_accept_packet(benchmark::State& state) {
  std::optional<std::uint64_t> last = 41;
  std::uint64_t incoming = 42;
  for (auto _ : state) {
    benchmark::DoNotOptimize(accept_packet(last, incoming));
    ++incoming;
  }
}
BENCHMARK(bm_accept_packet);

}  // namespace

BENCHMARK_MAIN();
