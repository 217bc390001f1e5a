#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "crossway/control.hpp"
#include "crossway/junction.hpp"
#include "crossway/topology.hpp"

namespace crossway {

enum class integrator_kind { semi_implicit_euler, rk4 };

struct sim_config {
  double dt_s = 0.01;
  double duration_s = 10.0;
  integrator_kind integrator = integrator_kind::semi_implicit_euler;
  // Symmetric |u| bound applied before integration; disabled when absent.
  std::optional<double> input_clamp_mps2;
  std::uint64_t seed = 0;
};

void validate(const sim_config& cfg);

struct fleet_state {
  double time_s = 0.0;
  std::vector<vehicle_state> vehicles;
};

// Advances every vehicle one step under piecewise-constant input.
// Semi-implicit Euler: v' = v + u*dt, p' = p + v'*dt. rk4 integrates the
// same double integrator and is exact for constant u.
fleet_state step(const fleet_state& fleet, const std::vector<double>& inputs,
                 const sim_config& cfg);

// Everything the synchronous closed-loop runner needs. Vehicle order in the
// vectors is the canonical column order; ids name the same positions.
struct closed_loop_setup {
  std::vector<std::string> ids;
  std::vector<double> p0_m;
  std::vector<double> v0_mps;
  std::vector<double> length_m;
  controller_params params;
  spacing_policy spacing;
  comm_graph graph;
  // When present, an edge feeds the control law only while both endpoints
  // are inside the cooperation zone; outside vehicles cruise.
  std::optional<junction_geometry> junction;
  std::optional<platoon_order> order;  // default: assigned from p0
};

// One communicating pair, follower first (the endpoint with the larger
// crossing rank). error series are the follower's gap errors
// e = p_f - p_l - p*_fl.
struct edge_channel {
  int follower = 0;  // index into ids
  int leader = 0;
};

struct trajectory_log {
  std::vector<std::string> ids;
  std::vector<double> time_s;
  // Indexed [vehicle][step].
  std::vector<std::vector<double>> progress_m;
  std::vector<std::vector<double>> speed_mps;
  std::vector<std::vector<double>> input_mps2;
  std::vector<edge_channel> edges;
  std::vector<std::vector<double>> edge_error_m;  // [edge][step]
  // Filled only in constant_gap mode, over speeds relative to the fleet
  // average so the series vanishes at formation + consensus.
  std::vector<double> lyapunov;
};

// Synchronous closed loop: every vehicle sees every neighbor's true state
// each step (zero-delay baseline). Refuses a disconnected graph unless
// allow_disconnected is set. Aborts when any |v| exceeds the divergence
// guard (100 m/s).
trajectory_log run_closed_loop(const closed_loop_setup& setup,
                               const sim_config& cfg,
                               bool allow_disconnected = false);

// u = 0 rollout: straight lines at the initial speeds.
trajectory_log run_uncontrolled(const closed_loop_setup& setup,
                                const sim_config& cfg);

}  // namespace crossway
