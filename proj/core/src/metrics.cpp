#include "crossway/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "crossway/errors.hpp"

namespace crossway {

const char* to_string(delay_kind k) {
  switch (k) {
    case delay_kind::transport_rtt: return "transport_rtt";
    case delay_kind::ws_ack: return "ws_ack";
    case delay_kind::state_rtt: return "state_rtt";
    case delay_kind::ttp: return "ttp";
  }
  return "unknown";
}

std::optional<delay_kind> delay_kind_from_string(const std::string& s) {
  if (s == "transport_rtt") return delay_kind::transport_rtt;
  if (s == "ws_ack") return delay_kind::ws_ack;
  if (s == "state_rtt") return delay_kind::state_rtt;
  if (s == "ttp") return delay_kind::ttp;
  return std::nullopt;
}

namespace {

double percentile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

}  // namespace

stats_summary stats(const std::vector<double>& samples) {
  if (samples.size() < 2) {
    throw insufficient_data_error("stats: need at least 2 samples");
  }
  stats_summary s;
  s.count = samples.size();
  double sum = 0.0;
  for (double x : samples) sum += x;
  s.mean = sum / static_cast<double>(samples.size());
  double ss = 0.0;
  for (double x : samples) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(samples.size() - 1));
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  s.p50 = percentile(sorted, 0.50);
  s.p95 = percentile(sorted, 0.95);
  s.max = sorted.back();
  return s;
}

std::vector<double> ttp_series(const std::vector<double>& receive_timestamps) {
  std::vector<double> out;
  for (std::size_t i = 1; i < receive_timestamps.size(); ++i) {
    if (receive_timestamps[i] < receive_timestamps[i - 1]) {
      throw validation_error("timestamps",
                             "must be sorted ascending at index " +
                                 std::to_string(i));
    }
    out.push_back(receive_timestamps[i] - receive_timestamps[i - 1]);
  }
  return out;
}

sequence_report sequence_progression(
    const std::vector<std::pair<double, std::uint64_t>>& accepted) {
  sequence_report report;
  for (std::size_t i = 1; i < accepted.size(); ++i) {
    const auto& [t, seq] = accepted[i];
    const std::uint64_t prev = accepted[i - 1].second;
    if (seq <= prev) {
      report.monotone = false;
      continue;
    }
    const std::uint64_t jump = seq - prev;
    if (jump > 1) {
      report.gaps.emplace_back(t, jump - 1);
      report.gap_total += jump - 1;
    }
  }
  return report;
}

std::optional<double> detect_settling(
    const std::vector<double>& time_s,
    const std::vector<std::vector<double>>& error_series, double threshold_m,
    double hold_s) {
  if (!(threshold_m > 0.0)) {
    throw domain_error("detect_settling: threshold must be > 0");
  }
  if (hold_s < 0.0) {
    throw domain_error("detect_settling: hold must be >= 0");
  }
  const std::size_t n = time_s.size();
  if (n == 0) return std::nullopt;
  for (const auto& series : error_series) {
    if (series.size() != n) {
      throw validation_error("error_series",
                             "length does not match the time grid");
    }
  }
  const auto good = [&](std::size_t k) {
    for (const auto& series : error_series) {
      if (std::fabs(series[k]) > threshold_m) return false;
    }
    return true;
  };
  // next_bad[k] = first index >= k with an excursion; n if none.
  std::vector<std::size_t> next_bad(n + 1, n);
  for (std::size_t k = n; k-- > 0;) {
    next_bad[k] = good(k) ? next_bad[k + 1] : k;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double window_end = time_s[k] + hold_s;
    if (window_end > time_s.back()) break;  // window no longer fits
    if (next_bad[k] == n || time_s[next_bad[k]] > window_end) {
      return time_s[k];
    }
  }
  return std::nullopt;
}

std::string format_report(const run_report& report) {
  std::ostringstream os;
  os.precision(6);
  os << "run report\n==========\n";
  if (report.settling_time_s) {
    os << "settling_time_s: " << *report.settling_time_s << "\n";
  } else {
    os << "settling_time_s: none\n";
  }
  os << "mutual_exclusion_ok: " << (report.mutual_exclusion_ok ? "yes" : "no")
     << " (violations: " << report.mutex_violation_count << ")\n";
  for (const auto& [pair, cls] : report.collision_classifications) {
    os << "collision " << pair << ": " << to_string(cls) << "\n";
  }
  if (report.v0) os << "V0: " << *report.v0 << "\n";
  if (report.c_hat) os << "c_hat: " << *report.c_hat << "\n";
  if (report.settling_bound_s) {
    os << "settling_bound_s: " << *report.settling_bound_s << "\n";
  }
  for (const auto& [kind, s] : report.delay_stats) {
    os << "delay " << to_string(kind) << ": mean=" << s.mean
       << " std=" << s.std << " p50=" << s.p50 << " p95=" << s.p95
       << " max=" << s.max << " n=" << s.count << "\n";
  }
  for (const auto& [key, value] : report.notes) {
    os << key << ": " << value << "\n";
  }
  return os.str();
}

}  // namespace crossway
