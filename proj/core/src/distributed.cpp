#include "crossway/distributed.hpp"

#include <algorithm>
#include <memory>

#include "crossway/errors.hpp"
#include "crossway/event_log.hpp"
#include "crossway/transport.hpp"

namespace crossway {

distributed_result run_distributed(const scenario& sc,
                                   const distributed_options& opts) {
  virtual_clock clock;
  virtual_scheduler sched(clock);
  event_log log;

  manager_service manager(opts.manager, sched, log);
  manager.start();

  const comm_graph graph = scenario_graph(sc);
  if (!is_connected(graph)) {
    throw configuration_error("communication topology is disconnected");
  }
  const closed_loop_setup setup = to_closed_loop(sc);

  std::vector<std::unique_ptr<vehicle_agent>> agents;
  agents.reserve(sc.vehicles.size());
  for (std::size_t k = 0; k < sc.vehicles.size(); ++k) {
    const auto& v = sc.vehicles[k];
    auto [agent_end, manager_end] = simulated_link(sc.network, clock);
    manager.attach_session(manager_end);

    agent_config cfg;
    cfg.id = v.id;
    cfg.name = v.name;
    cfg.type = vehicle_type::autonomous;
    cfg.send_rate_hz = opts.manager.rate_hz;
    cfg.control_rate_hz = 1.0 / sc.sim.dt_s;
    cfg.params = sc.params;
    cfg.spacing = sc.spacing;
    cfg.graph = graph;
    cfg.fleet_ids = setup.ids;
    cfg.base_order = *setup.order;
    cfg.junction = sc.junction;
    cfg.length_m = v.length_m;
    cfg.integrator = sc.sim.integrator;
    cfg.input_clamp_mps2 = sc.sim.input_clamp_mps2;
    cfg.integrate_dynamics = true;
    cfg.timer_stream = k + 1;  // manager timers own stream 0

    auto agent = std::make_unique<vehicle_agent>(cfg, sched, log);
    agent->attach(agent_end);
    agent->start(v.p0_m, v.v0_mps);
    agents.push_back(std::move(agent));
  }

  for (const auto& [at_ms, key, value] : opts.side_info_at_ms) {
    // Stream well past the agents' so coincident events order stably.
    clock.schedule(at_ms * 1000, virtual_clock::kTimerClass,
                   1000 + agents.size(), 0, [&manager, key, value] {
                     if (value.empty()) {
                       manager.clear_control_side_info(key);
                     } else {
                       manager.set_control_side_info(key, value);
                     }
                   });
  }

  clock.run_until(static_cast<std::int64_t>(sc.sim.duration_s * 1e6));

  for (auto& agent : agents) agent->stop();
  manager.stop();

  distributed_result result;
  result.broadcast_times_ms = manager.broadcast_times_ms();

  std::optional<std::int64_t> epoch;
  for (const auto& agent : agents) {
    if (const auto e = agent->epoch_ms()) {
      epoch = epoch ? std::min(*epoch, *e) : *e;
    }
  }
  result.epoch_ms = epoch;

  for (std::size_t k = 0; k < agents.size(); ++k) {
    const auto& agent = agents[k];
    const std::string& id = sc.vehicles[k].id;
    result.agent_subscribed[id] = agent->subscribed();
    result.accepted[id] = agent->accepted();
    auto rows = agent->rows_absolute();
    // Without a complete fleet there is no shared origin; absolute seconds
    // keep the agents comparable anyway.
    const double rebase = static_cast<double>(epoch.value_or(0));
    for (auto& row : rows) row.t_s = (row.t_s - rebase) / 1000.0;
    result.rows.insert(result.rows.end(), rows.begin(), rows.end());
    auto delays = agent->delays();
    result.delays.insert(result.delays.end(), delays.begin(), delays.end());
  }

  std::stable_sort(result.rows.begin(), result.rows.end(),
                   [](const trajectory_row& a, const trajectory_row& b) {
                     return a.t_s != b.t_s ? a.t_s < b.t_s
                                           : a.vehicle_id < b.vehicle_id;
                   });
  std::stable_sort(result.delays.begin(), result.delays.end(),
                   [](const delay_row& a, const delay_row& b) {
                     return a.timestamp_ms != b.timestamp_ms
                                ? a.timestamp_ms < b.timestamp_ms
                                : a.vehicle_id < b.vehicle_id;
                   });
  result.log_lines = log.lines();

  // Agents and the manager still hold endpoints whose callbacks reference
  // them; nothing fires anymore (the clock is done), so teardown order is
  // safe here.
  return result;
}

}  // namespace crossway
