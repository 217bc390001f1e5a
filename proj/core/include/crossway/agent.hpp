#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "crossway/control.hpp"
#include "crossway/csvio.hpp"
#include "crossway/dynamics.hpp"
#include "crossway/event_log.hpp"
#include "crossway/junction.hpp"
#include "crossway/protocol.hpp"
#include "crossway/topology.hpp"
#include "crossway/transport.hpp"

namespace crossway {

// Static per-vehicle configuration. fleet_ids fixes the canonical vehicle
// order: graph vertex k+1 corresponds to fleet_ids[k].
struct agent_config {
  std::string id;
  std::string name;
  vehicle_type type = vehicle_type::autonomous;
  double send_rate_hz = 20.0;
  double control_rate_hz = 100.0;
  controller_params params;
  spacing_policy spacing;
  comm_graph graph;
  std::vector<std::string> fleet_ids;
  platoon_order base_order;
  std::optional<junction_geometry> junction;
  double length_m = 4.6;
  std::int64_t stale_timeout_ms = 500;
  double stale_decel_mps2 = -2.0;
  integrator_kind integrator = integrator_kind::semi_implicit_euler;
  std::optional<double> input_clamp_mps2;
  // sim mode integrates own dynamics at the control rate; live mode expects
  // feed_state() from an external source.
  bool integrate_dynamics = true;
  std::uint64_t timer_stream = 1;  // scheduler stream for this agent's timers
};

void validate(const agent_config& cfg);

// Outcome of one control tick.
struct control_decision {
  double u_mps2 = 0.0;
  double e_pred_m = 0.0;  // NaN when the upstream neighbor is not visible
  bool in_ca = false;
  bool own_missing = false;     // own echo absent: command held
  bool stale_fallback = false;  // a relevant neighbor went stale
  std::int64_t global_seq_used = -1;
};

// Pure control decision from one traffic snapshot. Neighbor states are
// dead-reckoned from their timestamps to now_ms; with a junction configured,
// an edge feeds the law only while both endpoints are inside the cooperation
// zone. A stale neighbor (timestamp beyond stale_timeout_ms or flagged
// inactive) while cooperating commands the configured safe deceleration.
// Own echo missing from the snapshot holds last_u_mps2.
control_decision decide_control(const agent_config& cfg,
                                const vehicle_state& own,
                                const std::optional<traffic_update>& snapshot,
                                std::int64_t now_ms, double last_u_mps2);

// Round-trip of this agent's own state through the server: receive time
// minus the echoed status's send timestamp, matched by local_sequence
// against sends recorded in sent_at_ms. Empty when the update carries no
// echo of ours or the sequence is not one we recorded.
std::optional<double> measure_state_rtt(
    const traffic_update& update, const std::string& id,
    const std::map<std::uint64_t, std::int64_t>& sent_at_ms,
    std::int64_t receive_ms);

// The mobile-node client: subscribes, streams status at the send rate, keeps
// the latest accepted traffic snapshot, and runs the control loop at the
// control rate. Sender, receiver and control loop share one mutex-guarded
// snapshot; none blocks another beyond that copy.
//
// Lifetime: timer callbacks capture `this`, so the scheduler must be stopped
// (or the virtual clock no longer advanced) before the agent is destroyed.
class vehicle_agent {
 public:
  vehicle_agent(agent_config cfg, scheduler& sched, event_log& log);
  ~vehicle_agent();

  vehicle_agent(const vehicle_agent&) = delete;
  vehicle_agent& operator=(const vehicle_agent&) = delete;

  // Installs callbacks on the endpoint (must be called before start).
  void attach(std::shared_ptr<transport_endpoint> endpoint);

  // Sends the subscription and starts the sender/control timers, aligned to
  // their rate grids.
  void start(double p0_m, double v0_mps);
  void stop();

  // Live mode: replaces the vehicle state used by the next control tick.
  void feed_state(const vehicle_state& state);

  // Reconnect: fresh endpoint, local_sequence restarts at 0, re-subscribes.
  void restart_connection(std::shared_ptr<transport_endpoint> endpoint);

  // Post-run views. Row times are seconds relative to the fleet epoch (the
  // first accepted update listing every fleet id); earlier rows come out
  // negative.
  std::vector<trajectory_row> rows() const;
  // Same rows with t_s in absolute scheduler milliseconds, for callers that
  // rebase several agents onto one shared epoch.
  std::vector<trajectory_row> rows_absolute() const;
  std::vector<delay_row> delays() const;
  // (receive time ms, global_sequence) of every accepted update.
  std::vector<std::pair<std::int64_t, std::uint64_t>> accepted() const;

  bool subscribed() const;
  bool rejected() const;
  std::string rejection_reason() const;
  bool peer_disconnected() const;
  vehicle_state own_state() const;
  std::uint64_t next_local_sequence() const;
  std::optional<std::int64_t> epoch_ms() const;

 private:
  void handle_frame(const std::string& frame);
  void handle_disconnect();
  void sender_tick();
  void control_tick();
  void schedule_sender();
  void schedule_control();
  std::int64_t now_ms();
  void send_subscription_locked();

  agent_config cfg_;
  scheduler& sched_;
  event_log& log_;

  mutable std::mutex mu_;
  std::shared_ptr<transport_endpoint> endpoint_;
  std::vector<std::shared_ptr<transport_endpoint>> retired_;
  bool started_ = false;
  bool stopped_ = false;
  bool subscribed_ = false;
  bool rejected_ = false;
  std::string rejection_reason_;
  bool peer_disconnected_ = false;
  bool send_drop_logged_ = false;
  bool own_missing_logged_ = false;
  bool stale_logged_ = false;
  bool own_echo_seen_ = false;

  vehicle_state own_;
  double last_u_ = 0.0;
  std::uint64_t next_local_seq_ = 0;
  std::map<std::uint64_t, std::int64_t> sent_at_ms_;
  double last_rtt_ms_ = 0.0;

  std::optional<traffic_update> snapshot_;
  std::optional<std::uint64_t> last_global_seq_;
  std::optional<std::int64_t> prev_update_recv_ms_;
  std::optional<std::int64_t> epoch_ms_;

  std::vector<trajectory_row> rows_;  // t_s holds absolute ms until export
  std::vector<delay_row> delays_;
  std::vector<std::pair<std::int64_t, std::uint64_t>> accepted_;

  std::uint64_t timer_seq_ = 0;
};

}  // namespace crossway
