#include "crossway/manager.hpp"

#include <algorithm>

#include "crossway/errors.hpp"

namespace crossway {

registry::registry(double broadcast_rate_hz)
    : broadcast_rate_hz_(broadcast_rate_hz) {
  if (!(broadcast_rate_hz > 0.0)) {
    throw validation_error("manager.rate_hz", "must be > 0");
  }
}

subscription_ack registry::handle_subscribe(const subscription_request& request,
                                            std::int64_t now_ms) {
  if (request.id.empty()) {
    return {false, "empty id"};
  }
  if (records_.count(request.id) != 0) {
    return {false, "id '" + request.id + "' already subscribed"};
  }
  mobile_node_record record;
  record.id = request.id;
  record.name = request.name.empty() ? request.id : request.name;
  record.latest.vehicle_name = record.name;
  record.last_seen_ms = now_ms;
  records_.emplace(request.id, std::move(record));
  return {true, ""};
}

status_result registry::handle_status(const std::string& id,
                                      const status_message& msg,
                                      std::int64_t now_ms) {
  const auto it = records_.find(id);
  if (it == records_.end()) {
    throw protocol_violation("status from unsubscribed id '" + id + "'");
  }
  auto& record = it->second;
  if (accept_packet(record.last_accepted_local_sequence, msg.local_sequence) ==
      packet_decision::discard) {
    return status_result::discarded;
  }
  record.last_accepted_local_sequence = msg.local_sequence;
  record.latest = msg;
  record.last_seen_ms = now_ms;
  record.stale = false;
  return status_result::applied;
}

void registry::handle_disconnect(const std::string& id) { records_.erase(id); }

traffic_update registry::make_update(std::int64_t wall_ms) {
  traffic_update update;
  update.connected_nodes = static_cast<std::int64_t>(records_.size());
  update.global_sequence = next_global_sequence(global_counter_);
  update.global_timestamp_ms = wall_ms;
  update.control_side_info = control_side_info_;
  for (const auto& [id, record] : records_) {
    if (record.latest.type == vehicle_type::monitor) continue;
    // A node that has not reported yet has no state worth fabricating; it
    // still counts as connected.
    if (!record.last_accepted_local_sequence) continue;
    status_message snapshot = record.latest;
    // Identity in the fan-out is the subscription id, not whatever label the
    // client typed into its own frames.
    snapshot.vehicle_name = id;
    snapshot.connection_status =
        record.stale ? link_status::inactive : link_status::active;
    update.vehicles.push_back(std::move(snapshot));
  }
  return update;
}

std::vector<std::string> registry::stale_check(std::int64_t now_ms,
                                               std::int64_t timeout_ms) {
  if (timeout_ms <= broadcast_interval_ms()) {
    throw configuration_error(
        "stale timeout must exceed the broadcast interval");
  }
  std::vector<std::string> flagged;
  for (auto& [id, record] : records_) {
    if (now_ms - record.last_seen_ms > timeout_ms) {
      if (!record.stale) record.stale = true;
      flagged.push_back(id);
    }
  }
  return flagged;
}

void registry::set_control_side_info(const std::string& key,
                                     const std::string& value) {
  control_side_info_[key] = value;
}

void registry::clear_control_side_info(const std::string& key) {
  control_side_info_.erase(key);
}

const mobile_node_record* registry::find(const std::string& id) const {
  const auto it = records_.find(id);
  return it == records_.end() ? nullptr : &it->second;
}

manager_service::manager_service(const manager_config& config,
                                 scheduler& sched, event_log& log,
                                 std::function<std::int64_t()> wall_clock_ms)
    : config_(config),
      sched_(sched),
      log_(log),
      wall_clock_ms_(std::move(wall_clock_ms)),
      registry_(config.rate_hz) {
  if (config.stale_timeout_ms <= registry_.broadcast_interval_ms()) {
    throw configuration_error(
        "manager: stale timeout must exceed the broadcast interval");
  }
}

std::int64_t manager_service::now_ms() { return sched_.now_us() / 1000; }

void manager_service::attach_session(
    std::shared_ptr<transport_endpoint> endpoint) {
  std::uint64_t key = 0;
  {
    std::lock_guard lock(mu_);
    key = next_session_key_++;
    sessions_[key].endpoint = endpoint;
  }
  endpoint->set_on_message(
      [this, key](const std::string& frame) { on_frame(key, frame); });
  endpoint->set_on_disconnect([this, key] { on_disconnect(key); });
  endpoint->start();
}

void manager_service::on_frame(std::uint64_t session_key,
                               const std::string& frame) {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(session_key);
  if (it == sessions_.end() || it->second.dead) return;
  auto& sess = it->second;

  if (!sess.id) {
    // First frame of a session is its subscription.
    subscription_request request;
    try {
      request = decode_subscription(frame);
    } catch (const std::exception& err) {
      log_.log(now_ms(), "bad_subscription", {{"error", err.what()}});
      sess.endpoint->send(encode(subscription_ack{false, err.what()}));
      sess.endpoint->close();
      sess.dead = true;
      return;
    }
    const subscription_ack ack =
        registry_.handle_subscribe(request, now_ms());
    sess.endpoint->send(encode(ack));
    log_.log(now_ms(), "subscribe",
             {{"id", request.id},
              {"accepted", ack.accepted ? "1" : "0"},
              {"reason", ack.reason}});
    if (!ack.accepted) {
      sess.endpoint->close();
      sess.dead = true;
      return;
    }
    sess.id = request.id;
    return;
  }

  status_message msg;
  try {
    msg = decode_status(frame);
  } catch (const std::exception& err) {
    log_.log(now_ms(), "bad_status",
             {{"id", *sess.id}, {"error", err.what()}});
    return;  // malformed status: logged, state unchanged
  }
  try {
    const status_result result =
        registry_.handle_status(*sess.id, msg, now_ms());
    if (result == status_result::discarded) {
      log_.log(now_ms(), "status_discard",
               {{"id", *sess.id},
                {"seq", std::to_string(msg.local_sequence)}});
    }
  } catch (const protocol_violation& err) {
    log_.log(now_ms(), "protocol_violation",
             {{"id", *sess.id}, {"error", err.what()}});
    sess.endpoint->close();
    sess.dead = true;
  }
}

void manager_service::on_disconnect(std::uint64_t session_key) {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(session_key);
  if (it == sessions_.end()) return;
  if (it->second.id) {
    registry_.handle_disconnect(*it->second.id);
    log_.log(now_ms(), "disconnect", {{"id", *it->second.id}});
  }
  it->second.dead = true;
  // Teardown is deferred: the endpoint is executing this callback.
  closed_.push_back(it->second.endpoint);
  sessions_.erase(it);
}

void manager_service::start() {
  std::lock_guard lock(mu_);
  running_ = true;
  timer_stream_ = 0;
  schedule_next_broadcast();
  schedule_next_stale();
}

void manager_service::stop() {
  std::vector<std::shared_ptr<transport_endpoint>> to_close;
  {
    std::lock_guard lock(mu_);
    running_ = false;
    for (auto& [key, sess] : sessions_) to_close.push_back(sess.endpoint);
    sessions_.clear();
    to_close.insert(to_close.end(), closed_.begin(), closed_.end());
    closed_.clear();
  }
  for (auto& endpoint : to_close) endpoint->close();
}

void manager_service::schedule_next_broadcast() {
  const std::int64_t period_us =
      static_cast<std::int64_t>(1'000'000.0 / config_.rate_hz);
  const std::int64_t next = (sched_.now_us() / period_us + 1) * period_us;
  sched_.call_at(next, timer_stream_, timer_seq_++,
                 [this] { broadcast_tick(); });
}

void manager_service::schedule_next_stale() {
  // Sweep at the broadcast cadence; flagging resolution finer than the
  // timeout is not needed.
  const std::int64_t period_us =
      static_cast<std::int64_t>(1'000'000.0 / config_.rate_hz);
  const std::int64_t next = (sched_.now_us() / period_us + 1) * period_us;
  sched_.call_at(next, timer_stream_, timer_seq_++, [this] { stale_tick(); });
}

void manager_service::broadcast_tick() {
  std::vector<std::shared_ptr<transport_endpoint>> targets;
  std::string payload;
  {
    std::lock_guard lock(mu_);
    if (!running_) return;
    schedule_next_broadcast();
    closed_.clear();  // safe point: no session callback is on this stack
    if (registry_.subscriber_count() == 0) return;  // nobody to serve
    const std::int64_t wall =
        wall_clock_ms_ ? wall_clock_ms_() : now_ms();
    const traffic_update update = registry_.make_update(wall);
    payload = encode(update);  // one serialization, identical for everyone
    broadcast_times_ms_.push_back(static_cast<double>(now_ms()));
    log_.log(now_ms(), "broadcast",
             {{"seq", std::to_string(update.global_sequence)},
              {"nodes", std::to_string(update.connected_nodes)}});
    for (auto& [key, sess] : sessions_) {
      if (!sess.dead && sess.id) targets.push_back(sess.endpoint);
    }
  }
  for (auto& endpoint : targets) {
    endpoint->send(payload);  // enqueues; a slow peer cannot stall the tick
  }
}

void manager_service::stale_tick() {
  std::lock_guard lock(mu_);
  if (!running_) return;
  schedule_next_stale();
  const auto flagged =
      registry_.stale_check(now_ms(), config_.stale_timeout_ms);
  const std::set<std::string> flagged_set(flagged.begin(), flagged.end());
  for (const auto& id : flagged) {
    if (stale_logged_.insert(id).second) {
      log_.log(now_ms(), "stale", {{"id", id}});
    }
  }
  // Nodes that resumed reporting may go stale again later; log that too.
  for (auto it = stale_logged_.begin(); it != stale_logged_.end();) {
    it = flagged_set.count(*it) ? std::next(it) : stale_logged_.erase(it);
  }
}

std::vector<double> manager_service::broadcast_times_ms() const {
  std::lock_guard lock(mu_);
  return broadcast_times_ms_;
}

void manager_service::set_control_side_info(const std::string& key,
                                            const std::string& value) {
  std::lock_guard lock(mu_);
  registry_.set_control_side_info(key, value);
}

void manager_service::clear_control_side_info(const std::string& key) {
  std::lock_guard lock(mu_);
  registry_.clear_control_side_info(key);
}

std::size_t manager_service::subscriber_count() const {
  std::lock_guard lock(mu_);
  return registry_.subscriber_count();
}

}  // namespace crossway
