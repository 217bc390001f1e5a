#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "crossway/junction.hpp"

namespace crossway {

enum class delay_kind { transport_rtt, ws_ack, state_rtt, ttp };

const char* to_string(delay_kind k);
std::optional<delay_kind> delay_kind_from_string(const std::string& s);

struct delay_sample {
  delay_kind kind = delay_kind::state_rtt;
  double value_ms = 0.0;  // >= 0
  double timestamp_ms = 0.0;
};

struct stats_summary {
  double mean = 0.0;
  double std = 0.0;  // N-1 normalization
  double p50 = 0.0;
  double p95 = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

// Mean, sample standard deviation (N-1 divisor) and linearly interpolated
// percentiles. Requires at least 2 samples.
stats_summary stats(const std::vector<double>& samples);

// Successive differences of a sorted timestamp series; throws on unsorted
// input. A single timestamp yields an empty series.
std::vector<double> ttp_series(const std::vector<double>& receive_timestamps);

struct sequence_report {
  bool monotone = true;
  std::uint64_t gap_total = 0;  // accepted-sequence jumps minus one each
  std::vector<std::pair<double, std::uint64_t>> gaps;  // (time, gap size)
};

// Checks strict monotonicity of accepted (time, sequence) pairs and lists
// the gaps (sequence jumps > 1) for plotting.
sequence_report sequence_progression(
    const std::vector<std::pair<double, std::uint64_t>>& accepted);

// Earliest t such that every error series stays within threshold for the
// whole [t, t + hold_s] window (which must fit inside the log); none if no
// such t exists.
std::optional<double> detect_settling(
    const std::vector<double>& time_s,
    const std::vector<std::vector<double>>& error_series, double threshold_m,
    double hold_s);

// Aggregated outcome of one run; rendered to the report file.
struct run_report {
  std::map<delay_kind, stats_summary> delay_stats;
  std::optional<double> settling_time_s;
  bool mutual_exclusion_ok = true;
  std::size_t mutex_violation_count = 0;
  // Classification per (lead, follow) pair, crossing order.
  std::vector<std::pair<std::string, collision_class>> collision_classifications;
  std::optional<double> c_hat;
  std::optional<double> v0;
  std::optional<double> settling_bound_s;
  std::vector<std::pair<std::string, std::string>> notes;
};

std::string format_report(const run_report& report);

}  // namespace crossway
