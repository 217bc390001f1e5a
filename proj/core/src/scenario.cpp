#include "crossway/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "crossway/errors.hpp"

namespace crossway {

namespace {

using nlohmann::json;

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

const json& require(const json& obj, const std::string& path,
                    const std::string& key) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw validation_error(join(path, key), "missing");
  }
  return *it;
}

double as_double(const json& value, const std::string& field) {
  if (!value.is_number()) {
    throw validation_error(field, "expected a number");
  }
  const double d = value.get<double>();
  if (!std::isfinite(d)) {
    throw validation_error(field, "must be finite");
  }
  return d;
}

int as_int(const json& value, const std::string& field) {
  if (!value.is_number_integer()) {
    throw validation_error(field, "expected an integer");
  }
  return value.get<int>();
}

std::string as_string(const json& value, const std::string& field) {
  if (!value.is_string()) {
    throw validation_error(field, "expected a string");
  }
  return value.get<std::string>();
}

double require_double(const json& obj, const std::string& path,
                      const std::string& key) {
  return as_double(require(obj, path, key), join(path, key));
}

int require_int(const json& obj, const std::string& path,
                const std::string& key) {
  return as_int(require(obj, path, key), join(path, key));
}

std::string require_string(const json& obj, const std::string& path,
                           const std::string& key) {
  return as_string(require(obj, path, key), join(path, key));
}

scenario_vehicle parse_vehicle(const json& node, const std::string& path,
                               bool has_junction, int roads) {
  if (!node.is_object()) {
    throw validation_error(path, "expected an object");
  }
  scenario_vehicle v;
  v.id = require_string(node, path, "id");
  if (v.id.empty()) {
    throw validation_error(join(path, "id"), "must be non-empty");
  }
  v.name = node.contains("name") ? as_string(node["name"], join(path, "name"))
                                 : v.id;
  v.length_m = require_double(node, path, "length_m");
  if (!(v.length_m > 0.0)) {
    throw validation_error(join(path, "length_m"), "must be > 0");
  }
  v.p0_m = require_double(node, path, "p0_m");
  v.v0_mps = require_double(node, path, "v0_mps");
  if (node.contains("entry_road")) {
    v.entry_road = as_int(node["entry_road"], join(path, "entry_road"));
  }
  if (node.contains("exit_road")) {
    v.exit_road = as_int(node["exit_road"], join(path, "exit_road"));
  }
  if (has_junction) {
    if (v.entry_road < 1 || v.entry_road > roads) {
      throw validation_error(join(path, "entry_road"), "out of range");
    }
    if (v.exit_road < 1 || v.exit_road > roads) {
      throw validation_error(join(path, "exit_road"), "out of range");
    }
  }
  return v;
}

topology_spec parse_topology(const json& node) {
  topology_spec spec;
  if (node.is_string()) {
    const std::string name = node.get<std::string>();
    if (name == "chain") {
      spec.kind = topology_spec::preset::chain;
    } else if (name == "complete") {
      spec.kind = topology_spec::preset::complete;
    } else {
      throw validation_error("topology", "unknown preset '" + name + "'");
    }
    return spec;
  }
  if (node.is_object() && node.contains("edges")) {
    const json& edges = node["edges"];
    if (!edges.is_array()) {
      throw validation_error("topology.edges", "expected an array");
    }
    spec.kind = topology_spec::preset::explicit_edges;
    for (std::size_t k = 0; k < edges.size(); ++k) {
      const std::string field =
          "topology.edges[" + std::to_string(k) + "]";
      const json& e = edges[k];
      if (!e.is_array() || e.size() != 2) {
        throw validation_error(field, "expected a pair [i, j]");
      }
      spec.edges.emplace_back(as_int(e[0], field), as_int(e[1], field));
    }
    return spec;
  }
  throw validation_error(
      "topology", "expected \"chain\", \"complete\" or {\"edges\": [...]}");
}

spacing_mode parse_mode(const std::string& text) {
  if (text == "headway_literal") return spacing_mode::headway_literal;
  if (text == "constant_gap") return spacing_mode::constant_gap;
  throw validation_error("controller.mode",
                         "expected headway_literal or constant_gap");
}

integrator_kind parse_integrator(const std::string& text) {
  if (text == "semi_implicit_euler") {
    return integrator_kind::semi_implicit_euler;
  }
  if (text == "rk4") return integrator_kind::rk4;
  throw validation_error("sim.integrator",
                         "expected semi_implicit_euler or rk4");
}

delay_distribution parse_distribution(const std::string& text) {
  if (text == "constant") return delay_distribution::constant;
  if (text == "normal") return delay_distribution::normal;
  if (text == "lognormal") return delay_distribution::lognormal;
  throw validation_error("network.model",
                         "expected constant, normal or lognormal");
}

// The scenario's crossing order before any runtime re-prioritization:
// rank 1 = closest to the trajectory midpoint.
platoon_order initial_order(const scenario& sc) {
  std::vector<std::pair<std::string, double>> id_progress;
  id_progress.reserve(sc.vehicles.size());
  for (const auto& v : sc.vehicles) id_progress.emplace_back(v.id, v.p0_m);
  return assign_crossing_order(id_progress);
}

}  // namespace

scenario parse_scenario(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& err) {
    throw decode_error(err.byte, err.what());
  }
  if (!root.is_object()) {
    throw validation_error("document", "expected a JSON object");
  }

  scenario sc;
  sc.name = root.contains("name")
                ? as_string(root["name"], "name")
                : std::string("scenario");

  if (root.contains("junction")) {
    const json& node = root["junction"];
    if (!node.is_object()) {
      throw validation_error("junction", "expected an object");
    }
    junction_geometry geom;
    geom.roads = require_int(node, "junction", "roads");
    geom.cz_radius_m = require_double(node, "junction", "cz_radius_m");
    geom.ca_half_length_m =
        require_double(node, "junction", "ca_half_length_m");
    validate(geom);
    sc.junction = geom;
  }

  const json& vehicles = require(root, "", "vehicles");
  if (!vehicles.is_array() || vehicles.empty()) {
    throw validation_error("vehicles", "expected a non-empty array");
  }
  std::set<std::string> seen_ids;
  for (std::size_t k = 0; k < vehicles.size(); ++k) {
    const std::string path = "vehicles[" + std::to_string(k) + "]";
    auto v = parse_vehicle(vehicles[k], path, sc.junction.has_value(),
                           sc.junction ? sc.junction->roads : 0);
    if (!seen_ids.insert(v.id).second) {
      throw validation_error(join(path, "id"), "duplicate id '" + v.id + "'");
    }
    sc.vehicles.push_back(std::move(v));
  }

  sc.topology = root.contains("topology") ? parse_topology(root["topology"])
                                          : topology_spec{};

  const json& controller = require(root, "", "controller");
  if (!controller.is_object()) {
    throw validation_error("controller", "expected an object");
  }
  sc.params.alpha = require_double(controller, "controller", "alpha");
  if (!(sc.params.alpha > 0.0 && sc.params.alpha < 1.0)) {
    throw validation_error("controller.alpha",
                           "must lie strictly inside (0, 1)");
  }
  sc.spacing.standstill_gap_m =
      require_double(controller, "controller", "standstill_gap_m");
  if (!(sc.spacing.standstill_gap_m > 0.0)) {
    throw validation_error("controller.standstill_gap_m", "must be > 0");
  }
  sc.spacing.headway_s = require_double(controller, "controller", "headway_s");
  if (sc.spacing.headway_s < 0.0) {
    throw validation_error("controller.headway_s", "must be >= 0");
  }
  sc.spacing.mode =
      parse_mode(require_string(controller, "controller", "mode"));
  if (controller.contains("reference_speed_mps")) {
    sc.spacing.reference_speed_mps = as_double(
        controller["reference_speed_mps"], "controller.reference_speed_mps");
    if (sc.spacing.reference_speed_mps < 0.0) {
      throw validation_error("controller.reference_speed_mps",
                             "must be >= 0");
    }
  } else if (sc.spacing.mode == spacing_mode::constant_gap) {
    // Default reference: the initial speed of the vehicle that crosses
    // first.
    const auto order = initial_order(sc);
    for (const auto& v : sc.vehicles) {
      if (order.ranks.at(v.id) == 1) {
        sc.spacing.reference_speed_mps = v.v0_mps;
        break;
      }
    }
  }

  const json& sim = require(root, "", "sim");
  if (!sim.is_object()) {
    throw validation_error("sim", "expected an object");
  }
  sc.sim.dt_s = require_double(sim, "sim", "dt_s");
  sc.sim.duration_s = require_double(sim, "sim", "duration_s");
  if (sim.contains("integrator")) {
    sc.sim.integrator =
        parse_integrator(as_string(sim["integrator"], "sim.integrator"));
  }
  if (sim.contains("input_clamp_mps2")) {
    sc.sim.input_clamp_mps2 =
        as_double(sim["input_clamp_mps2"], "sim.input_clamp_mps2");
  }
  if (sim.contains("seed")) {
    const int seed = as_int(sim["seed"], "sim.seed");
    if (seed < 0) throw validation_error("sim.seed", "must be >= 0");
    sc.sim.seed = static_cast<std::uint64_t>(seed);
  }
  validate(sc.sim);

  if (root.contains("network")) {
    const json& node = root["network"];
    if (!node.is_object()) {
      throw validation_error("network", "expected an object");
    }
    sc.network.distribution =
        parse_distribution(require_string(node, "network", "model"));
    if (node.contains("mean_ms")) {
      sc.network.mean_ms = as_double(node["mean_ms"], "network.mean_ms");
    }
    if (node.contains("std_ms")) {
      sc.network.std_ms = as_double(node["std_ms"], "network.std_ms");
    }
    if (node.contains("mu")) {
      sc.network.mu = as_double(node["mu"], "network.mu");
    }
    if (node.contains("sigma")) {
      sc.network.sigma = as_double(node["sigma"], "network.sigma");
    }
    if (node.contains("reorder_p")) {
      sc.network.reorder_probability =
          as_double(node["reorder_p"], "network.reorder_p");
    }
    if (node.contains("seed")) {
      const int seed = as_int(node["seed"], "network.seed");
      if (seed < 0) throw validation_error("network.seed", "must be >= 0");
      sc.network.seed = static_cast<std::uint64_t>(seed);
    }
    validate(sc.network);
  }

  // The graph must be constructible; this also validates explicit edges.
  scenario_graph(sc);
  return sc;
}

scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw runtime_fault("cannot open scenario: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

comm_graph scenario_graph(const scenario& sc) {
  const int n = static_cast<int>(sc.vehicles.size());
  switch (sc.topology.kind) {
    case topology_spec::preset::complete:
      return complete_graph(n);
    case topology_spec::preset::chain: {
      // Chain over crossing ranks, so platoon neighbors communicate.
      const auto order = initial_order(sc);
      std::vector<int> by_rank(sc.vehicles.size());
      for (std::size_t k = 0; k < sc.vehicles.size(); ++k) {
        by_rank[static_cast<std::size_t>(
            order.ranks.at(sc.vehicles[k].id) - 1)] = static_cast<int>(k) + 1;
      }
      std::vector<std::pair<int, int>> edges;
      for (std::size_t k = 0; k + 1 < by_rank.size(); ++k) {
        edges.emplace_back(by_rank[k], by_rank[k + 1]);
      }
      return build_graph(n, edges);
    }
    case topology_spec::preset::explicit_edges:
      return build_graph(n, sc.topology.edges);
  }
  throw domain_error("scenario_graph: unreachable");
}

closed_loop_setup to_closed_loop(const scenario& sc) {
  closed_loop_setup setup;
  for (const auto& v : sc.vehicles) {
    setup.ids.push_back(v.id);
    setup.p0_m.push_back(v.p0_m);
    setup.v0_mps.push_back(v.v0_mps);
    setup.length_m.push_back(v.length_m);
  }
  setup.params = sc.params;
  setup.spacing = sc.spacing;
  setup.graph = scenario_graph(sc);
  setup.junction = sc.junction;
  setup.order = initial_order(sc);
  return setup;
}

}  // namespace crossway
