#include "crossway/agent.hpp"

#include <algorithm>
#include <cmath>

#include "crossway/errors.hpp"

namespace crossway {

namespace {

constexpr std::size_t kSentWindow = 4096;  // RTT matching horizon

std::int64_t period_us(double rate_hz) {
  return static_cast<std::int64_t>(std::llround(1e6 / rate_hz));
}

// Magnitude from both components, direction from the longitudinal sign.
double scalar_speed(const status_message& m) {
  return std::copysign(std::hypot(m.speed_lat, m.speed_lon), m.speed_lon);
}

}  // namespace

void validate(const agent_config& cfg) {
  if (cfg.id.empty()) {
    throw validation_error("agent.id", "must be non-empty");
  }
  if (!(cfg.send_rate_hz > 0.0)) {
    throw validation_error("agent.send_rate_hz", "must be > 0");
  }
  if (!(cfg.control_rate_hz > 0.0)) {
    throw validation_error("agent.control_rate_hz", "must be > 0");
  }
  if (cfg.stale_timeout_ms <= 0) {
    throw validation_error("agent.stale_timeout_ms", "must be > 0");
  }
  if (!(cfg.length_m > 0.0)) {
    throw validation_error("agent.length_m", "must be > 0");
  }
  if (cfg.graph.n != static_cast<int>(cfg.fleet_ids.size())) {
    throw validation_error("agent.fleet_ids",
                           "size must match the topology order");
  }
  if (std::find(cfg.fleet_ids.begin(), cfg.fleet_ids.end(), cfg.id) ==
      cfg.fleet_ids.end()) {
    throw validation_error("agent.fleet_ids", "must contain the agent's id");
  }
  for (const auto& id : cfg.fleet_ids) {
    if (!cfg.base_order.ranks.count(id)) {
      throw validation_error("agent.base_order", "missing rank for '" + id +
                                                     "'");
    }
  }
  validate(cfg.params);
  validate(cfg.spacing);
  if (cfg.junction) validate(*cfg.junction);
}

control_decision decide_control(const agent_config& cfg,
                                const vehicle_state& own,
                                const std::optional<traffic_update>& snapshot,
                                std::int64_t now_ms, double last_u_mps2) {
  control_decision decision;
  decision.e_pred_m = std::nan("");
  decision.in_ca = cfg.junction
                       ? ca_occupancy(own.progress_m, cfg.length_m,
                                      *cfg.junction)
                       : false;
  if (!snapshot) return decision;  // no traffic picture yet: cruise
  decision.global_seq_used =
      static_cast<std::int64_t>(snapshot->global_sequence);

  const auto find_entry =
      [&](const std::string& id) -> const status_message* {
    for (const auto& v : snapshot->vehicles) {
      if (v.vehicle_name == id) return &v;
    }
    return nullptr;
  };

  if (find_entry(cfg.id) == nullptr) {
    // The manager does not know us right now; freezing the command is the
    // least surprising degraded behavior.
    decision.own_missing = true;
    decision.u_mps2 = last_u_mps2;
    return decision;
  }

  platoon_order order = cfg.base_order;
  const auto priority = snapshot->control_side_info.find(kPriorityVehicleKey);
  if (priority != snapshot->control_side_info.end()) {
    order = prioritize(order, priority->second);
  }
  const int own_rank = order.ranks.at(cfg.id);
  const int own_vertex =
      static_cast<int>(std::find(cfg.fleet_ids.begin(), cfg.fleet_ids.end(),
                                 cfg.id) -
                       cfg.fleet_ids.begin()) +
      1;

  const bool own_in_cz =
      !cfg.junction || in_cooperation_zone(own.progress_m, *cfg.junction);

  neighbor_view view;
  bool any_stale = false;
  for (int j : neighbors(cfg.graph, own_vertex)) {
    const std::string& neighbor_id =
        cfg.fleet_ids[static_cast<std::size_t>(j) - 1];
    const status_message* entry = find_entry(neighbor_id);
    if (entry == nullptr) continue;  // not reporting: edge carries nothing

    const std::int64_t age_ms =
        std::max<std::int64_t>(0, now_ms - entry->local_timestamp_ms);
    const bool stale = age_ms > cfg.stale_timeout_ms ||
                       entry->connection_status == link_status::inactive;

    const double speed = scalar_speed(*entry);
    const double predicted =
        entry->proximity_m + speed * static_cast<double>(age_ms) / 1000.0;

    const bool active =
        own_in_cz && (!cfg.junction ||
                      in_cooperation_zone(predicted, *cfg.junction));
    if (!active) continue;
    if (stale) {
      any_stale = true;
      continue;
    }

    const int neighbor_rank = order.ranks.at(neighbor_id);
    const double follower_speed =
        own_rank > neighbor_rank ? own.speed_mps : speed;
    const double gap =
        desired_gap(cfg.spacing, follower_speed, neighbor_rank - own_rank);
    view.push_back({neighbor_id, predicted, speed, gap});
  }

  // Predicted spacing error against the vehicle one rank ahead, whether or
  // not the edge currently feeds the law.
  if (own_rank > 1) {
    for (const auto& [id, rank] : order.ranks) {
      if (rank != own_rank - 1) continue;
      if (const status_message* entry = find_entry(id)) {
        const std::int64_t age_ms =
            std::max<std::int64_t>(0, now_ms - entry->local_timestamp_ms);
        const double predicted =
            entry->proximity_m +
            scalar_speed(*entry) * static_cast<double>(age_ms) / 1000.0;
        const double gap = desired_gap(cfg.spacing, own.speed_mps, -1);
        decision.e_pred_m = own.progress_m - predicted - gap;
      }
      break;
    }
  }

  if (any_stale) {
    decision.stale_fallback = true;
    decision.u_mps2 = cfg.stale_decel_mps2;
  } else {
    decision.u_mps2 =
        view.empty() ? 0.0 : control_input(own, view, cfg.params);
  }
  if (cfg.input_clamp_mps2) {
    const double clamp = *cfg.input_clamp_mps2;
    decision.u_mps2 = std::clamp(decision.u_mps2, -clamp, clamp);
  }
  return decision;
}

std::optional<double> measure_state_rtt(
    const traffic_update& update, const std::string& id,
    const std::map<std::uint64_t, std::int64_t>& sent_at_ms,
    std::int64_t receive_ms) {
  for (const auto& v : update.vehicles) {
    if (v.vehicle_name != id) continue;
    const auto it = sent_at_ms.find(v.local_sequence);
    if (it == sent_at_ms.end()) return std::nullopt;
    // Send and receive stamps come from the same local clock.
    return static_cast<double>(receive_ms - v.local_timestamp_ms);
  }
  return std::nullopt;
}

vehicle_agent::vehicle_agent(agent_config cfg, scheduler& sched,
                             event_log& log)
    : cfg_(std::move(cfg)), sched_(sched), log_(log) {
  validate(cfg_);
}

vehicle_agent::~vehicle_agent() { stop(); }

std::int64_t vehicle_agent::now_ms() { return sched_.now_us() / 1000; }

void vehicle_agent::attach(std::shared_ptr<transport_endpoint> endpoint) {
  std::lock_guard lock(mu_);
  endpoint_ = std::move(endpoint);
  endpoint_->set_on_message([this](const std::string& f) { handle_frame(f); });
  endpoint_->set_on_disconnect([this] { handle_disconnect(); });
  endpoint_->start();
}

void vehicle_agent::send_subscription_locked() {
  subscription_request req;
  req.id = cfg_.id;
  req.name = cfg_.name;
  endpoint_->send(encode(req));
  log_.log(now_ms(), "subscribe_sent", {{"id", cfg_.id}});
}

void vehicle_agent::start(double p0_m, double v0_mps) {
  std::lock_guard lock(mu_);
  if (started_) throw configuration_error("agent already started");
  if (!endpoint_) throw configuration_error("agent has no transport");
  started_ = true;
  own_ = {p0_m, v0_mps, 0.0};
  send_subscription_locked();
  schedule_sender();
  schedule_control();
}

void vehicle_agent::stop() {
  std::shared_ptr<transport_endpoint> endpoint;
  {
    std::lock_guard lock(mu_);
    if (stopped_) return;
    stopped_ = true;
    endpoint = endpoint_;
  }
  if (endpoint) endpoint->close();
}

void vehicle_agent::feed_state(const vehicle_state& state) {
  std::lock_guard lock(mu_);
  own_ = state;
}

void vehicle_agent::restart_connection(
    std::shared_ptr<transport_endpoint> endpoint) {
  std::shared_ptr<transport_endpoint> old;
  {
    std::lock_guard lock(mu_);
    old = endpoint_;
    if (old) retired_.push_back(old);  // destroyed with the agent, not here
    endpoint_ = std::move(endpoint);
    endpoint_->set_on_message(
        [this](const std::string& f) { handle_frame(f); });
    endpoint_->set_on_disconnect([this] { handle_disconnect(); });
    endpoint_->start();
    subscribed_ = false;
    rejected_ = false;
    peer_disconnected_ = false;
    next_local_seq_ = 0;  // sequence restarts with the connection
    sent_at_ms_.clear();
    log_.log(now_ms(), "reconnect", {{"id", cfg_.id}});
    send_subscription_locked();
  }
  if (old) old->close();
}

void vehicle_agent::schedule_sender() {
  const std::int64_t period = period_us(cfg_.send_rate_hz);
  const std::int64_t next = (sched_.now_us() / period + 1) * period;
  sched_.call_at(next, cfg_.timer_stream, timer_seq_++,
                 [this] { sender_tick(); });
}

void vehicle_agent::schedule_control() {
  const std::int64_t period = period_us(cfg_.control_rate_hz);
  const std::int64_t next = (sched_.now_us() / period + 1) * period;
  sched_.call_at(next, cfg_.timer_stream, timer_seq_++,
                 [this] { control_tick(); });
}

void vehicle_agent::sender_tick() {
  std::lock_guard lock(mu_);
  if (stopped_) return;
  schedule_sender();
  if (!subscribed_ || rejected_) return;  // nothing to stream yet
  if (!endpoint_ || !endpoint_->connected()) {
    if (!send_drop_logged_) {
      log_.log(now_ms(), "send_drop", {{"id", cfg_.id}});
      send_drop_logged_ = true;
    }
    return;
  }
  send_drop_logged_ = false;

  status_message m;
  m.type = cfg_.type;
  m.vehicle_name = cfg_.id;
  m.gnss_heading = 0.0;
  m.speed_lat = 0.0;
  m.speed_lon = own_.speed_mps;
  m.proximity_m = own_.progress_m;
  m.connection_status = link_status::active;
  m.latency_ms = last_rtt_ms_;
  m.local_timestamp_ms = now_ms();
  m.local_sequence = next_local_seq_++;
  sent_at_ms_[m.local_sequence] = m.local_timestamp_ms;
  if (sent_at_ms_.size() > kSentWindow) {
    sent_at_ms_.erase(sent_at_ms_.begin());
  }
  endpoint_->send(encode(m));
}

void vehicle_agent::control_tick() {
  std::lock_guard lock(mu_);
  if (stopped_) return;
  schedule_control();

  const std::int64_t now = now_ms();
  const control_decision decision =
      decide_control(cfg_, own_, snapshot_, now, last_u_);
  // Before our first echo the manager legitimately doesn't list us yet;
  // only a later disappearance is worth a warning.
  if (decision.own_missing && own_echo_seen_ && !own_missing_logged_) {
    log_.log(now, "own_echo_missing", {{"id", cfg_.id}});
    own_missing_logged_ = true;
  }
  if (!decision.own_missing) own_missing_logged_ = false;
  if (decision.stale_fallback && !stale_logged_) {
    log_.log(now, "stale_fallback", {{"id", cfg_.id}});
    stale_logged_ = true;
  }
  if (!decision.stale_fallback) stale_logged_ = false;
  last_u_ = decision.u_mps2;

  trajectory_row row;
  row.t_s = static_cast<double>(now);  // absolute ms; rebased on export
  row.vehicle_id = cfg_.id;
  row.p_m = own_.progress_m;
  row.v_mps = own_.speed_mps;
  row.u_mps2 = decision.u_mps2;
  row.e_pred_m = decision.e_pred_m;
  row.in_ca = decision.in_ca;
  row.global_seq_used = decision.global_seq_used;
  rows_.push_back(std::move(row));

  if (cfg_.integrate_dynamics) {
    sim_config one_step;
    one_step.dt_s = 1.0 / cfg_.control_rate_hz;
    one_step.duration_s = one_step.dt_s;
    one_step.integrator = cfg_.integrator;
    one_step.input_clamp_mps2 = cfg_.input_clamp_mps2;
    fleet_state fleet{0.0, {own_}};
    own_ = step(fleet, {decision.u_mps2}, one_step).vehicles[0];
  }
}

void vehicle_agent::handle_frame(const std::string& frame) {
  std::lock_guard lock(mu_);
  if (stopped_) return;
  const std::int64_t recv = now_ms();

  if (!subscribed_ && !rejected_) {
    try {
      const subscription_ack ack = decode_ack(frame);
      if (ack.accepted) {
        subscribed_ = true;
        log_.log(recv, "subscribed", {{"id", cfg_.id}});
      } else {
        rejected_ = true;
        rejection_reason_ = ack.reason;
        log_.log(recv, "subscription_rejected",
                 {{"id", cfg_.id}, {"reason", ack.reason}});
      }
    } catch (const std::exception& err) {
      log_.log(recv, "bad_ack", {{"id", cfg_.id}, {"error", err.what()}});
    }
    return;
  }

  traffic_update update;
  try {
    update = decode_update(frame);
  } catch (const std::exception& err) {
    log_.log(recv, "bad_update", {{"id", cfg_.id}, {"error", err.what()}});
    return;  // snapshot unchanged
  }

  if (prev_update_recv_ms_) {
    delays_.push_back({recv, cfg_.id, delay_kind::ttp,
                       static_cast<double>(recv - *prev_update_recv_ms_)});
  }
  prev_update_recv_ms_ = recv;

  if (const auto rtt = measure_state_rtt(update, cfg_.id, sent_at_ms_, recv)) {
    delays_.push_back({recv, cfg_.id, delay_kind::state_rtt, *rtt});
    last_rtt_ms_ = *rtt;
  }
  for (const auto& v : update.vehicles) {
    if (v.vehicle_name == cfg_.id) {
      own_echo_seen_ = true;
      break;
    }
  }

  if (accept_packet(last_global_seq_, update.global_sequence) ==
      packet_decision::discard) {
    log_.log(recv, "update_discard",
             {{"id", cfg_.id},
              {"seq", std::to_string(update.global_sequence)}});
    return;
  }
  last_global_seq_ = update.global_sequence;
  accepted_.emplace_back(recv, update.global_sequence);

  if (!epoch_ms_) {
    bool complete = true;
    for (const auto& id : cfg_.fleet_ids) {
      const auto present = std::any_of(
          update.vehicles.begin(), update.vehicles.end(),
          [&](const status_message& v) { return v.vehicle_name == id; });
      if (!present) {
        complete = false;
        break;
      }
    }
    if (complete) {
      // Shared time origin: the server stamp of the first update that lists
      // the whole fleet is the same number for every subscriber.
      epoch_ms_ = update.global_timestamp_ms;
      log_.log(recv, "fleet_complete",
               {{"id", cfg_.id},
                {"epoch_ms", std::to_string(*epoch_ms_)}});
    }
  }
  snapshot_ = std::move(update);
}

void vehicle_agent::handle_disconnect() {
  std::lock_guard lock(mu_);
  peer_disconnected_ = true;
  log_.log(now_ms(), "peer_disconnect", {{"id", cfg_.id}});
}

std::vector<trajectory_row> vehicle_agent::rows() const {
  std::lock_guard lock(mu_);
  std::vector<trajectory_row> out = rows_;
  const double epoch = static_cast<double>(
      epoch_ms_.value_or(out.empty() ? 0 : static_cast<std::int64_t>(
                                               out.front().t_s)));
  for (auto& row : out) row.t_s = (row.t_s - epoch) / 1000.0;
  return out;
}

std::vector<trajectory_row> vehicle_agent::rows_absolute() const {
  std::lock_guard lock(mu_);
  return rows_;
}

std::vector<delay_row> vehicle_agent::delays() const {
  std::lock_guard lock(mu_);
  return delays_;
}

std::vector<std::pair<std::int64_t, std::uint64_t>> vehicle_agent::accepted()
    const {
  std::lock_guard lock(mu_);
  return accepted_;
}

bool vehicle_agent::subscribed() const {
  std::lock_guard lock(mu_);
  return subscribed_;
}

bool vehicle_agent::rejected() const {
  std::lock_guard lock(mu_);
  return rejected_;
}

std::string vehicle_agent::rejection_reason() const {
  std::lock_guard lock(mu_);
  return rejection_reason_;
}

bool vehicle_agent::peer_disconnected() const {
  std::lock_guard lock(mu_);
  return peer_disconnected_;
}

vehicle_state vehicle_agent::own_state() const {
  std::lock_guard lock(mu_);
  return own_;
}

std::uint64_t vehicle_agent::next_local_sequence() const {
  std::lock_guard lock(mu_);
  return next_local_seq_;
}

std::optional<std::int64_t> vehicle_agent::epoch_ms() const {
  std::lock_guard lock(mu_);
  return epoch_ms_;
}

}  // namespace crossway
