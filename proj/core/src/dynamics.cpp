#include "crossway/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "crossway/errors.hpp"

namespace crossway {

namespace {

constexpr double kDivergenceGuardMps = 100.0;

double clamp_input(double u, const sim_config& cfg) {
  if (!cfg.input_clamp_mps2) return u;
  const double bound = *cfg.input_clamp_mps2;
  return std::clamp(u, -bound, bound);
}

// Rank offsets and edge channels are frozen once at run start.
struct run_context {
  std::vector<int> rank;             // by vehicle index
  std::vector<edge_channel> edges;   // follower/leader indices
};

run_context make_context(const closed_loop_setup& setup) {
  run_context ctx;
  platoon_order order;
  if (setup.order) {
    order = *setup.order;
  } else {
    std::vector<std::pair<std::string, double>> id_progress;
    for (std::size_t i = 0; i < setup.ids.size(); ++i) {
      id_progress.emplace_back(setup.ids[i], setup.p0_m[i]);
    }
    order = assign_crossing_order(id_progress);
  }
  ctx.rank.resize(setup.ids.size());
  for (std::size_t i = 0; i < setup.ids.size(); ++i) {
    ctx.rank[i] = order.ranks.at(setup.ids[i]);
  }
  const int n = setup.graph.n;
  for (int i = 1; i <= n; ++i) {
    for (int j = i + 1; j <= n; ++j) {
      if (!setup.graph.edge(i, j)) continue;
      edge_channel ch;
      if (ctx.rank[i - 1] > ctx.rank[j - 1]) {
        ch.follower = i - 1;
        ch.leader = j - 1;
      } else {
        ch.follower = j - 1;
        ch.leader = i - 1;
      }
      ctx.edges.push_back(ch);
    }
  }
  return ctx;
}

void validate_setup(const closed_loop_setup& setup) {
  const std::size_t n = setup.ids.size();
  if (n == 0) throw configuration_error("closed loop: no vehicles");
  if (setup.p0_m.size() != n || setup.v0_mps.size() != n ||
      setup.length_m.size() != n) {
    throw configuration_error("closed loop: state vectors disagree on size");
  }
  if (setup.graph.n != static_cast<int>(n)) {
    throw configuration_error("closed loop: graph size mismatch");
  }
  validate(setup.params);
  validate(setup.spacing);
  if (setup.junction) validate(*setup.junction);
}

}  // namespace

void validate(const sim_config& cfg) {
  if (!(cfg.dt_s > 0.0)) {
    throw validation_error("sim.dt_s", "must be > 0");
  }
  if (!(cfg.duration_s >= cfg.dt_s)) {
    throw validation_error("sim.duration_s", "must be >= dt_s");
  }
  if (cfg.input_clamp_mps2 && !(*cfg.input_clamp_mps2 > 0.0)) {
    throw validation_error("sim.input_clamp_mps2", "must be > 0 when set");
  }
}

fleet_state step(const fleet_state& fleet, const std::vector<double>& inputs,
                 const sim_config& cfg) {
  validate(cfg);
  if (inputs.size() != fleet.vehicles.size()) {
    throw configuration_error("step: one input per vehicle required");
  }
  fleet_state next = fleet;
  next.time_s = fleet.time_s + cfg.dt_s;
  for (std::size_t i = 0; i < fleet.vehicles.size(); ++i) {
    if (!std::isfinite(inputs[i])) {
      throw runtime_fault("step: non-finite input for vehicle " +
                          std::to_string(i + 1) + " at t=" +
                          std::to_string(fleet.time_s));
    }
    const double u = clamp_input(inputs[i], cfg);
    auto& v = next.vehicles[i];
    const double dt = cfg.dt_s;
    if (cfg.integrator == integrator_kind::semi_implicit_euler) {
      v.speed_mps = fleet.vehicles[i].speed_mps + u * dt;
      v.progress_m = fleet.vehicles[i].progress_m + v.speed_mps * dt;
    } else {
      // RK4 on (p' = v, v' = u) with u constant over the step; exact:
      // p += v*dt + u*dt^2/2, v += u*dt.
      const double p0 = fleet.vehicles[i].progress_m;
      const double v0 = fleet.vehicles[i].speed_mps;
      const double k1p = v0, k1v = u;
      const double k2p = v0 + 0.5 * dt * k1v, k2v = u;
      const double k3p = v0 + 0.5 * dt * k2v, k3v = u;
      const double k4p = v0 + dt * k3v, k4v = u;
      v.progress_m = p0 + dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
      v.speed_mps = v0 + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    v.input_mps2 = u;
  }
  return next;
}

trajectory_log run_closed_loop(const closed_loop_setup& setup,
                               const sim_config& cfg,
                               bool allow_disconnected) {
  validate_setup(setup);
  validate(cfg);
  if (!is_connected(setup.graph) && !allow_disconnected) {
    throw configuration_error(
        "closed loop: communication graph is not connected; the convergence "
        "guarantee does not apply (pass allow_disconnected to run anyway)");
  }
  const run_context ctx = make_context(setup);
  const std::size_t n = setup.ids.size();
  const auto steps = static_cast<std::size_t>(
      std::llround(cfg.duration_s / cfg.dt_s));

  trajectory_log log;
  log.ids = setup.ids;
  log.edges = ctx.edges;
  log.progress_m.assign(n, {});
  log.speed_mps.assign(n, {});
  log.input_mps2.assign(n, {});
  log.edge_error_m.assign(ctx.edges.size(), {});
  const bool track_lyapunov =
      setup.spacing.mode == spacing_mode::constant_gap;

  fleet_state fleet;
  fleet.time_s = 0.0;
  fleet.vehicles.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    fleet.vehicles[i].progress_m = setup.p0_m[i];
    fleet.vehicles[i].speed_mps = setup.v0_mps[i];
  }

  const auto edge_active = [&](int a, int b) {
    if (!setup.junction) return true;
    return in_cooperation_zone(fleet.vehicles[a].progress_m, *setup.junction) &&
           in_cooperation_zone(fleet.vehicles[b].progress_m, *setup.junction);
  };

  const auto record = [&]() {
    log.time_s.push_back(fleet.time_s);
    for (std::size_t i = 0; i < n; ++i) {
      log.progress_m[i].push_back(fleet.vehicles[i].progress_m);
      log.speed_mps[i].push_back(fleet.vehicles[i].speed_mps);
      log.input_mps2[i].push_back(fleet.vehicles[i].input_mps2);
    }
    for (std::size_t e = 0; e < ctx.edges.size(); ++e) {
      const auto& ch = ctx.edges[e];
      const auto& f = fleet.vehicles[ch.follower];
      const auto& l = fleet.vehicles[ch.leader];
      const double gap = desired_gap(
          setup.spacing, f.speed_mps,
          ctx.rank[ch.leader] - ctx.rank[ch.follower]);
      log.edge_error_m[e].push_back(f.progress_m - l.progress_m - gap);
    }
    if (track_lyapunov) {
      double mean_v = 0.0;
      for (const auto& v : fleet.vehicles) mean_v += v.speed_mps;
      mean_v /= static_cast<double>(n);
      std::vector<pair_error> pairs;
      std::vector<double> deviations;
      for (std::size_t i = 0; i < n; ++i) {
        deviations.push_back(fleet.vehicles[i].speed_mps - mean_v);
        for (std::size_t j = 0; j < n; ++j) {
          if (i == j ||
              !setup.graph.edge(static_cast<int>(i) + 1,
                                static_cast<int>(j) + 1)) {
            continue;
          }
          const double gap = desired_gap(setup.spacing,
                                         fleet.vehicles[i].speed_mps,
                                         ctx.rank[j] - ctx.rank[i]);
          pairs.push_back({fleet.vehicles[i].progress_m -
                               fleet.vehicles[j].progress_m - gap,
                           1.0});
        }
      }
      log.lyapunov.push_back(lyapunov_value(pairs, deviations, setup.params,
                                            setup.spacing.mode));
    }
  };

  std::vector<double> inputs(n, 0.0);
  for (std::size_t k = 0; k < steps; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      neighbor_view view;
      for (int j : neighbors(setup.graph, static_cast<int>(i) + 1)) {
        const std::size_t jj = static_cast<std::size_t>(j) - 1;
        if (!edge_active(static_cast<int>(i), static_cast<int>(jj))) continue;
        const double follower_speed = ctx.rank[i] > ctx.rank[jj]
                                          ? fleet.vehicles[i].speed_mps
                                          : fleet.vehicles[jj].speed_mps;
        const double gap = desired_gap(setup.spacing, follower_speed,
                                       ctx.rank[jj] - ctx.rank[i]);
        view.push_back({setup.ids[jj], fleet.vehicles[jj].progress_m,
                        fleet.vehicles[jj].speed_mps, gap});
      }
      inputs[i] =
          view.empty() ? 0.0 : control_input(fleet.vehicles[i], view,
                                             setup.params);
      fleet.vehicles[i].input_mps2 = clamp_input(inputs[i], cfg);
    }
    record();
    fleet = step(fleet, inputs, cfg);
    for (std::size_t i = 0; i < n; ++i) {
      if (std::fabs(fleet.vehicles[i].speed_mps) > kDivergenceGuardMps) {
        throw runtime_fault(
            "closed loop diverged: |v| > 100 m/s for vehicle " +
            setup.ids[i] + " at t=" + std::to_string(fleet.time_s));
      }
    }
  }
  record();  // final state with the last applied inputs
  return log;
}

trajectory_log run_uncontrolled(const closed_loop_setup& setup,
                                const sim_config& cfg) {
  validate_setup(setup);
  validate(cfg);
  const run_context ctx = make_context(setup);
  const std::size_t n = setup.ids.size();
  const auto steps = static_cast<std::size_t>(
      std::llround(cfg.duration_s / cfg.dt_s));

  trajectory_log log;
  log.ids = setup.ids;
  log.edges = ctx.edges;
  log.progress_m.assign(n, {});
  log.speed_mps.assign(n, {});
  log.input_mps2.assign(n, {});
  log.edge_error_m.assign(ctx.edges.size(), {});

  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * cfg.dt_s;
    log.time_s.push_back(t);
    for (std::size_t i = 0; i < n; ++i) {
      log.progress_m[i].push_back(setup.p0_m[i] + setup.v0_mps[i] * t);
      log.speed_mps[i].push_back(setup.v0_mps[i]);
      log.input_mps2[i].push_back(0.0);
    }
    for (std::size_t e = 0; e < ctx.edges.size(); ++e) {
      const auto& ch = ctx.edges[e];
      const double gap = desired_gap(
          setup.spacing, setup.v0_mps[ch.follower],
          ctx.rank[ch.leader] - ctx.rank[ch.follower]);
      log.edge_error_m[e].push_back(log.progress_m[ch.follower].back() -
                                    log.progress_m[ch.leader].back() - gap);
    }
  }
  return log;
}

}  // namespace crossway
