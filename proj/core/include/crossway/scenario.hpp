#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "crossway/dynamics.hpp"
#include "crossway/transport.hpp"

namespace crossway {

struct scenario_vehicle {
  std::string id;
  std::string name;
  double length_m = 0.0;
  double p0_m = 0.0;
  double v0_mps = 0.0;
  int entry_road = 1;
  int exit_road = 2;
};

struct topology_spec {
  enum class preset { chain, complete, explicit_edges };
  preset kind = preset::chain;
  std::vector<std::pair<int, int>> edges;  // 1-based, explicit_edges only
};

// Complete description of one run: fleet, geometry, communication topology,
// controller tuning, integration settings and the network impairment model.
// A parsed scenario has already passed every module-level validation.
struct scenario {
  std::string name;
  std::vector<scenario_vehicle> vehicles;
  std::optional<junction_geometry> junction;
  topology_spec topology;
  controller_params params;
  spacing_policy spacing;
  sim_config sim;
  latency_model network;
};

// Parses and fully validates a scenario document (JSON object, UTF-8).
// Throws decode_error on malformed JSON and validation_error with a dotted
// field path (e.g. "controller.alpha") on contract violations.
scenario parse_scenario(const std::string& text);

// Reads the file then parses; runtime_fault if the file cannot be read.
scenario load_scenario(const std::string& path);

comm_graph scenario_graph(const scenario& sc);

// Assembles the synchronous closed-loop inputs: canonical vehicle order is
// the scenario's declaration order; crossing order is assigned from initial
// progress.
closed_loop_setup to_closed_loop(const scenario& sc);

}  // namespace crossway
