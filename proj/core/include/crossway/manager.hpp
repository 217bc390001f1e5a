#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "crossway/event_log.hpp"
#include "crossway/protocol.hpp"
#include "crossway/transport.hpp"

namespace crossway {

struct mobile_node_record {
  std::string id;
  std::string name;
  status_message latest;
  std::int64_t last_seen_ms = 0;
  std::optional<std::uint64_t> last_accepted_local_sequence;
  bool stale = false;
};

enum class status_result { applied, discarded };

// Subscription list, latest-status store and broadcast assembly. Pure
// bookkeeping: no transport, no clock of its own. Not thread-safe; the
// owning service serializes access.
class registry {
 public:
  explicit registry(double broadcast_rate_hz = 20.0);

  double broadcast_rate_hz() const { return broadcast_rate_hz_; }
  std::int64_t broadcast_interval_ms() const {
    return static_cast<std::int64_t>(1000.0 / broadcast_rate_hz_);
  }

  // Unique id: accepted, record created. Duplicate id: rejected; the caller
  // must close the offending session.
  subscription_ack handle_subscribe(const subscription_request& request,
                                    std::int64_t now_ms);

  // Applies the late-predecessor rule on the sender's local_sequence.
  // Throws protocol_violation for an unsubscribed id (session must die).
  status_result handle_status(const std::string& id, const status_message& msg,
                              std::int64_t now_ms);

  void handle_disconnect(const std::string& id);

  // Snapshot for one broadcast: every registered node's latest status
  // (monitors excluded from the vehicles list but counted as connected),
  // a fresh global sequence and the given wall timestamp.
  traffic_update make_update(std::int64_t wall_ms);

  // Flags nodes silent for longer than timeout_ms. Flagged nodes are
  // reported with connection_status = inactive in subsequent updates until
  // they resume.
  std::vector<std::string> stale_check(std::int64_t now_ms,
                                       std::int64_t timeout_ms);

  void set_control_side_info(const std::string& key, const std::string& value);
  void clear_control_side_info(const std::string& key);

  std::size_t subscriber_count() const { return records_.size(); }
  const mobile_node_record* find(const std::string& id) const;

 private:
  double broadcast_rate_hz_;
  std::map<std::string, mobile_node_record> records_;
  std::map<std::string, std::string> control_side_info_;
  sequence_counter global_counter_;
};

struct manager_config {
  double rate_hz = 20.0;
  std::int64_t stale_timeout_ms = 500;
};

// Binds a registry to transport sessions and a scheduler: accepts
// subscriptions (first inbound frame per session), ingests status frames,
// broadcasts on the rate grid and runs staleness sweeps. Thread-safe; in
// live mode callbacks arrive on socket threads.
class manager_service {
 public:
  manager_service(const manager_config& config, scheduler& sched,
                  event_log& log,
                  std::function<std::int64_t()> wall_clock_ms = {});

  // Takes ownership of a fresh session (callbacks not yet installed).
  void attach_session(std::shared_ptr<transport_endpoint> endpoint);

  // Starts the broadcast/stale timers, aligned to the rate grid.
  void start();
  void stop();

  std::vector<double> broadcast_times_ms() const;
  std::size_t subscriber_count() const;

  // Advisory key/value pairs carried verbatim in every subsequent broadcast.
  void set_control_side_info(const std::string& key, const std::string& value);
  void clear_control_side_info(const std::string& key);

 private:
  struct session {
    std::shared_ptr<transport_endpoint> endpoint;
    std::optional<std::string> id;  // set once subscribed
    bool dead = false;
  };

  void on_frame(std::uint64_t session_key, const std::string& frame);
  void on_disconnect(std::uint64_t session_key);
  void broadcast_tick();
  void stale_tick();
  void schedule_next_broadcast();
  void schedule_next_stale();
  std::int64_t now_ms();

  manager_config config_;
  scheduler& sched_;
  event_log& log_;
  std::function<std::int64_t()> wall_clock_ms_;

  mutable std::mutex mu_;
  registry registry_;
  std::map<std::uint64_t, session> sessions_;
  std::set<std::string> stale_logged_;
  std::vector<std::shared_ptr<transport_endpoint>> closed_;  // deferred teardown
  std::uint64_t next_session_key_ = 1;
  std::vector<double> broadcast_times_ms_;
  bool running_ = false;
  std::uint64_t timer_stream_ = 0;
  std::uint64_t timer_seq_ = 0;
};

}  // namespace crossway
