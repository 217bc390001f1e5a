#include "crossway/protocol.hpp"

#include <cmath>
#include <limits>

#include <json.hpp>

#include "crossway/errors.hpp"

namespace crossway {

namespace {

using nlohmann::json;

json parse(const std::string& bytes) {
  try {
    return json::parse(bytes);
  } catch (const json::parse_error& err) {
    throw decode_error(err.byte, err.what());
  }
}

const json& require(const json& j, const char* field) {
  const auto it = j.find(field);
  if (it == j.end()) {
    throw validation_error(field, "missing");
  }
  return *it;
}

double require_finite_number(const json& j, const char* field) {
  const json& v = require(j, field);
  if (!v.is_number()) throw validation_error(field, "must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw validation_error(field, "must be finite");
  return x;
}

std::int64_t require_int(const json& j, const char* field) {
  const json& v = require(j, field);
  if (!v.is_number_integer()) {
    throw validation_error(field, "must be an integer");
  }
  return v.get<std::int64_t>();
}

std::uint64_t require_uint(const json& j, const char* field) {
  const json& v = require(j, field);
  if (!v.is_number_unsigned() &&
      !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw validation_error(field, "must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::string require_string(const json& j, const char* field) {
  const json& v = require(j, field);
  if (!v.is_string()) throw validation_error(field, "must be a string");
  return v.get<std::string>();
}

vehicle_type parse_vehicle_type(const std::string& s) {
  if (s == "autonomous") return vehicle_type::autonomous;
  if (s == "human_driven_connected") return vehicle_type::human_driven_connected;
  if (s == "monitor") return vehicle_type::monitor;
  throw validation_error("vehicle_type", "unknown value '" + s + "'");
}

link_status parse_link_status(const std::string& s) {
  if (s == "active") return link_status::active;
  if (s == "inactive") return link_status::inactive;
  throw validation_error("connection_status", "unknown value '" + s + "'");
}

json to_json(const status_message& m) {
  return json{{"vehicle_type", to_string(m.type)},
              {"vehicle_name", m.vehicle_name},
              {"gnss_lat", m.gnss_lat},
              {"gnss_lon", m.gnss_lon},
              {"gnss_heading", m.gnss_heading},
              {"speed_lat", m.speed_lat},
              {"speed_lon", m.speed_lon},
              {"proximity_m", m.proximity_m},
              {"connection_status", to_string(m.connection_status)},
              {"latency_ms", m.latency_ms},
              {"local_timestamp_ms", m.local_timestamp_ms},
              {"local_sequence", m.local_sequence}};
}

status_message status_from_json(const json& j) {
  status_message m;
  m.type = parse_vehicle_type(require_string(j, "vehicle_type"));
  m.vehicle_name = require_string(j, "vehicle_name");
  m.gnss_lat = require_finite_number(j, "gnss_lat");
  m.gnss_lon = require_finite_number(j, "gnss_lon");
  m.gnss_heading = require_finite_number(j, "gnss_heading");
  if (m.gnss_heading < 0.0 || m.gnss_heading >= 360.0) {
    throw validation_error("gnss_heading", "must lie in [0, 360)");
  }
  m.speed_lat = require_finite_number(j, "speed_lat");
  m.speed_lon = require_finite_number(j, "speed_lon");
  m.proximity_m = require_finite_number(j, "proximity_m");
  m.connection_status =
      parse_link_status(require_string(j, "connection_status"));
  m.latency_ms = require_finite_number(j, "latency_ms");
  if (m.latency_ms < 0.0) {
    throw validation_error("latency_ms", "must be >= 0");
  }
  m.local_timestamp_ms = require_int(j, "local_timestamp_ms");
  m.local_sequence = require_uint(j, "local_sequence");
  return m;
}

}  // namespace

const char* to_string(vehicle_type t) {
  switch (t) {
    case vehicle_type::autonomous: return "autonomous";
    case vehicle_type::human_driven_connected: return "human_driven_connected";
    case vehicle_type::monitor: return "monitor";
  }
  return "unknown";
}

const char* to_string(link_status s) {
  return s == link_status::active ? "active" : "inactive";
}

std::string encode(const status_message& m) { return to_json(m).dump(); }

std::string encode(const traffic_update& m) {
  json vehicles = json::array();
  for (const auto& v : m.vehicles) vehicles.push_back(to_json(v));
  return json{{"connected_nodes", m.connected_nodes},
              {"global_sequence", m.global_sequence},
              {"global_timestamp_ms", m.global_timestamp_ms},
              {"control_side_info", m.control_side_info},
              {"vehicles", vehicles}}
      .dump();
}

std::string encode(const subscription_request& m) {
  return json{{"id", m.id}, {"name", m.name}}.dump();
}

std::string encode(const subscription_ack& m) {
  return json{{"accepted", m.accepted}, {"reason", m.reason}}.dump();
}

status_message decode_status(const std::string& bytes) {
  return status_from_json(parse(bytes));
}

traffic_update decode_update(const std::string& bytes) {
  const json j = parse(bytes);
  traffic_update u;
  u.connected_nodes = require_int(j, "connected_nodes");
  if (u.connected_nodes < 0) {
    throw validation_error("connected_nodes", "must be >= 0");
  }
  u.global_sequence = require_uint(j, "global_sequence");
  u.global_timestamp_ms = require_int(j, "global_timestamp_ms");
  const json& info = require(j, "control_side_info");
  if (!info.is_object()) {
    throw validation_error("control_side_info", "must be an object");
  }
  for (const auto& [key, value] : info.items()) {
    if (!value.is_string()) {
      throw validation_error("control_side_info." + key,
                             "must be a string");
    }
    u.control_side_info[key] = value.get<std::string>();
  }
  const json& vehicles = require(j, "vehicles");
  if (!vehicles.is_array()) {
    throw validation_error("vehicles", "must be an array");
  }
  for (const auto& v : vehicles) u.vehicles.push_back(status_from_json(v));
  return u;
}

subscription_request decode_subscription(const std::string& bytes) {
  const json j = parse(bytes);
  subscription_request r;
  r.id = require_string(j, "id");
  r.name = require_string(j, "name");
  if (r.id.empty()) throw validation_error("id", "must be non-empty");
  return r;
}

subscription_ack decode_ack(const std::string& bytes) {
  const json j = parse(bytes);
  subscription_ack a;
  const json& accepted = require(j, "accepted");
  if (!accepted.is_boolean()) {
    throw validation_error("accepted", "must be a boolean");
  }
  a.accepted = accepted.get<bool>();
  a.reason = require_string(j, "reason");
  return a;
}

packet_decision accept_packet(std::optional<std::uint64_t> last_accepted,
                              std::uint64_t incoming) {
  if (!last_accepted || incoming > *last_accepted) {
    return packet_decision::accept;
  }
  return packet_decision::discard;
}

std::uint64_t next_global_sequence(sequence_counter& counter) {
  if (counter.next_value == std::numeric_limits<std::uint64_t>::max()) {
    throw runtime_fault("global sequence counter exhausted");
  }
  return counter.next_value++;
}

}  // namespace crossway
