#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "crossway/metrics.hpp"

namespace crossway {

// One sample of one vehicle's trajectory as produced by a run. `e_pred_m` is
// the vehicle's own predicted spacing error against its upstream neighbor
// (NaN while no neighbor snapshot exists); `global_seq_used` is the broadcast
// sequence the control decision was based on (-1 before the first accepted
// update).
struct trajectory_row {
  double t_s = 0.0;
  std::string vehicle_id;
  double p_m = 0.0;
  double v_mps = 0.0;
  double u_mps2 = 0.0;
  double e_pred_m = 0.0;
  bool in_ca = false;
  std::int64_t global_seq_used = -1;
};

inline constexpr const char* kTrajectoryHeader =
    "t_s,vehicle_id,p_m,v_mps,u_mps2,e_pred_m,in_ca,global_seq_used";

void write_trajectory_csv(std::ostream& out,
                          const std::vector<trajectory_row>& rows);
void write_trajectory_csv(const std::string& path,
                          const std::vector<trajectory_row>& rows);

// Throws validation_error naming the offending line; runtime_fault if the
// file cannot be opened.
std::vector<trajectory_row> read_trajectory_csv(std::istream& in);
std::vector<trajectory_row> read_trajectory_csv(const std::string& path);

struct delay_row {
  std::int64_t timestamp_ms = 0;
  std::string vehicle_id;
  delay_kind kind = delay_kind::transport_rtt;
  double value_ms = 0.0;
};

inline constexpr const char* kDelayHeader =
    "timestamp_ms,vehicle_id,kind,value_ms";

void write_delay_csv(std::ostream& out, const std::vector<delay_row>& rows);
void write_delay_csv(const std::string& path,
                     const std::vector<delay_row>& rows);
std::vector<delay_row> read_delay_csv(std::istream& in);
std::vector<delay_row> read_delay_csv(const std::string& path);

// Formats a double compactly but losslessly enough for analysis ("nan" for
// NaN, round-trips through strtod).
std::string format_double(double value);

// Splits one CSV line on commas (no quoting in our schemas).
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace crossway
