#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace crossway {

enum class vehicle_type { autonomous, human_driven_connected, monitor };
enum class link_status { active, inactive };

const char* to_string(vehicle_type t);
const char* to_string(link_status s);

// Periodic client -> server state report. One JSON object per frame,
// snake_case field names, no batching.
struct status_message {
  vehicle_type type = vehicle_type::autonomous;
  std::string vehicle_name;
  double gnss_lat = 0.0;
  double gnss_lon = 0.0;
  double gnss_heading = 0.0;  // degrees, [0, 360)
  double speed_lat = 0.0;
  double speed_lon = 0.0;
  // Signed progress along the trajectory (negative before the intersection
  // center). Authoritative for the control plane.
  double proximity_m = 0.0;
  link_status connection_status = link_status::active;
  double latency_ms = 0.0;  // last delay this sender measured
  std::int64_t local_timestamp_ms = 0;
  std::uint64_t local_sequence = 0;

  friend bool operator==(const status_message&,
                         const status_message&) = default;
};

// Periodic server -> client fan-out of every registered vehicle's latest
// status.
struct traffic_update {
  std::int64_t connected_nodes = 0;
  std::uint64_t global_sequence = 0;
  std::int64_t global_timestamp_ms = 0;
  std::map<std::string, std::string> control_side_info;
  std::vector<status_message> vehicles;

  friend bool operator==(const traffic_update&,
                         const traffic_update&) = default;
};

struct subscription_request {
  std::string id;
  std::string name;

  friend bool operator==(const subscription_request&,
                         const subscription_request&) = default;
};

struct subscription_ack {
  bool accepted = false;
  std::string reason;

  friend bool operator==(const subscription_ack&,
                         const subscription_ack&) = default;
};

// Reserved control_side_info key: agents re-rank the named vehicle first.
inline constexpr const char* kPriorityVehicleKey = "priority_vehicle";

// Encoding is UTF-8 JSON, one object per frame. decode_* throw decode_error
// (with byte offset) on malformed bytes and validation_error (naming the
// field) on missing/out-of-range fields; unknown fields are ignored.
std::string encode(const status_message& m);
std::string encode(const traffic_update& m);
std::string encode(const subscription_request& m);
std::string encode(const subscription_ack& m);

status_message decode_status(const std::string& bytes);
traffic_update decode_update(const std::string& bytes);
subscription_request decode_subscription(const std::string& bytes);
subscription_ack decode_ack(const std::string& bytes);

enum class packet_decision { accept, discard };

// Late-predecessor rule: accept iff this is the first packet or the sequence
// strictly advances; equal sequences are duplicates and are discarded.
packet_decision accept_packet(std::optional<std::uint64_t> last_accepted,
                              std::uint64_t incoming);

// Server-lifetime broadcast counter: yields 0, 1, 2, ...; aborts on
// exhaustion rather than wrapping.
struct sequence_counter {
  std::uint64_t next_value = 0;
};

std::uint64_t next_global_sequence(sequence_counter& counter);

}  // namespace crossway
