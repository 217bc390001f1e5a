// crossway: run cooperative-crossing simulations, serve the traffic manager,
// run a vehicle agent, or analyze a finished run directory.
//
// Exit codes: 0 success, 1 validation failure, 2 safety violation,
// 3 runtime fault.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "crossway/agent.hpp"
#include "crossway/analysis.hpp"
#include "crossway/csvio.hpp"
#include "crossway/distributed.hpp"
#include "crossway/errors.hpp"
#include "crossway/event_log.hpp"
#include "crossway/manager.hpp"
#include "crossway/scenario.hpp"
#include "crossway/socket_transport.hpp"
#include "crossway/transport.hpp"

namespace fs = std::filesystem;
using namespace crossway;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitSafety = 2;
constexpr int kExitRuntime = 3;

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted.store(true); }

bool debug_logging() {
  const char* v = std::getenv("CROSSWAY_LOG");
  return v != nullptr && std::string(v) == "debug";
}

void write_lines(const std::string& path, const std::vector<std::string>& ls) {
  std::ofstream out(path);
  if (!out) throw runtime_fault("cannot open for writing: " + path);
  for (const auto& line : ls) out << line << '\n';
}

void write_accepted_csv(
    const std::string& path,
    const std::vector<std::pair<std::int64_t, std::uint64_t>>& accepted) {
  std::ofstream out(path);
  if (!out) throw runtime_fault("cannot open for writing: " + path);
  out << "recv_ms,global_sequence\n";
  for (const auto& [ms, seq] : accepted) out << ms << ',' << seq << '\n';
}

// Shared by simulate and report: derived artifacts next to the raw logs.
void write_analysis_artifacts(const fs::path& dir, const scenario& sc,
                              const run_analysis& a) {
  write_report_file((dir / "report.txt").string(), a.report);
  write_errors_csv((dir / "errors.csv").string(), a);
  if (!a.lyapunov.empty()) {
    write_lyapunov_csv((dir / "lyapunov.csv").string(), a);
  }
  write_collision_csv((dir / "collisions.csv").string(), sc, a);
}

int run_outcome(const run_analysis& a) {
  if (!a.report.mutual_exclusion_ok) {
    std::cerr << "safety: " << a.report.mutex_violation_count
              << " mutual-exclusion violations\n";
    return kExitSafety;
  }
  if (!a.report.settling_time_s) {
    std::cerr << "run did not settle within the configured window\n";
    return kExitSafety;
  }
  return kExitOk;
}

struct network_flags {
  std::string model;
  double mean_ms = 0.0;
  double std_ms = 0.0;
  double mu = 0.0;
  double sigma = 0.0;
  double reorder_p = -1.0;
  std::int64_t seed = -1;

  void apply(scenario& sc) const {
    if (!model.empty()) {
      if (model == "constant") {
        sc.network.distribution = delay_distribution::constant;
      } else if (model == "normal") {
        sc.network.distribution = delay_distribution::normal;
      } else if (model == "lognormal") {
        sc.network.distribution = delay_distribution::lognormal;
      } else {
        throw validation_error("network.model",
                               "expected constant, normal or lognormal");
      }
      sc.network.mean_ms = mean_ms;
      sc.network.std_ms = std_ms;
      sc.network.mu = mu;
      sc.network.sigma = sigma;
    }
    if (reorder_p >= 0.0) sc.network.reorder_probability = reorder_p;
    if (seed >= 0) sc.network.seed = static_cast<std::uint64_t>(seed);
    validate(sc.network);
  }
};

int cmd_simulate(const std::string& scenario_path, const std::string& out_dir,
                 std::int64_t seed, bool uncontrolled,
                 const network_flags& net, double threshold_m, double hold_s) {
  scenario sc = load_scenario(scenario_path);
  if (seed >= 0) {
    sc.sim.seed = static_cast<std::uint64_t>(seed);
    sc.network.seed = static_cast<std::uint64_t>(seed);
  }
  net.apply(sc);

  const fs::path dir(out_dir);
  fs::create_directories(dir);

  if (uncontrolled) {
    const closed_loop_setup setup = to_closed_loop(sc);
    const trajectory_log log = run_uncontrolled(setup, sc.sim);
    std::vector<trajectory_row> rows;
    for (std::size_t i = 0; i < setup.ids.size(); ++i) {
      for (std::size_t k = 0; k < log.time_s.size(); ++k) {
        trajectory_row row;
        row.t_s = log.time_s[k];
        row.vehicle_id = setup.ids[i];
        row.p_m = log.progress_m[i][k];
        row.v_mps = log.speed_mps[i][k];
        row.u_mps2 = 0.0;
        row.e_pred_m = std::nan("");
        row.in_ca = sc.junction && ca_occupancy(row.p_m, setup.length_m[i],
                                                *sc.junction);
        row.global_seq_used = -1;
        rows.push_back(std::move(row));
      }
    }
    write_trajectory_csv((dir / "trajectory.csv").string(), rows);
    write_delay_csv((dir / "delays.csv").string(), {});
    const run_analysis a = analyze_run(sc, rows, {}, threshold_m, hold_s);
    write_analysis_artifacts(dir, sc, a);
    std::cout << format_report(a.report);
    bool entered = !a.report.mutual_exclusion_ok;
    for (const auto& [pair, klass] : a.report.collision_classifications) {
      if (klass == collision_class::enters) entered = true;
    }
    if (entered) {
      std::cerr << "safety: conflicting-area co-occupancy without control\n";
      return kExitSafety;
    }
    return kExitOk;
  }

  const distributed_result result = run_distributed(sc);
  write_trajectory_csv((dir / "trajectory.csv").string(), result.rows);
  write_delay_csv((dir / "delays.csv").string(), result.delays);
  write_lines((dir / "events.log").string(), result.log_lines);
  for (const auto& [id, accepted] : result.accepted) {
    write_accepted_csv((dir / (id + "_accepted.csv")).string(), accepted);
  }

  run_analysis a = analyze_run(sc, result.rows, result.delays, threshold_m,
                               hold_s);
  for (const auto& [id, accepted] : result.accepted) {
    std::vector<std::pair<double, std::uint64_t>> pairs;
    for (const auto& [ms, seq] : accepted) {
      pairs.emplace_back(static_cast<double>(ms), seq);
    }
    const sequence_report sr = sequence_progression(pairs);
    a.report.notes.emplace_back(
        "accepted_monotone_" + id,
        sr.monotone ? std::string("true") : std::string("false"));
  }
  write_analysis_artifacts(dir, sc, a);
  std::cout << format_report(a.report);
  return run_outcome(a);
}

int cmd_serve(const std::string& bind, double rate_hz, std::int64_t stale_ms,
              const std::string& port_file, const std::string& log_file,
              double duration_s) {
  const auto [host, port] = parse_hostport(bind);

  event_log log;
  std::ofstream log_sink;
  if (!log_file.empty()) {
    log_sink.open(log_file);
    if (!log_sink) throw runtime_fault("cannot open log file: " + log_file);
    log.set_sink(&log_sink);
  } else if (debug_logging()) {
    log.set_sink(&std::cerr);
  }

  thread_scheduler sched;
  manager_config cfg;
  cfg.rate_hz = rate_hz;
  cfg.stale_timeout_ms = stale_ms;
  manager_service service(cfg, sched, log);

  tcp_listener listener(host, port);
  listener.start([&service](std::shared_ptr<transport_endpoint> endpoint) {
    service.attach_session(std::move(endpoint));
  });
  service.start();

  std::cout << "listening on " << host << ':' << listener.port() << std::endl;
  if (!port_file.empty()) {
    std::ofstream pf(port_file);
    if (!pf) throw runtime_fault("cannot open port file: " + port_file);
    pf << listener.port() << '\n';
  }

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  const auto start = std::chrono::steady_clock::now();
  while (!g_interrupted.load()) {
    if (duration_s > 0.0) {
      const std::chrono::duration<double> elapsed =
          std::chrono::steady_clock::now() - start;
      if (elapsed.count() >= duration_s) break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }

  listener.stop();
  service.stop();
  sched.stop();
  return kExitOk;
}

int cmd_agent(const std::string& id, const std::string& name,
              const std::string& manager_addr, const std::string& mode,
              const std::string& scenario_path, const std::string& out_dir,
              double duration_s) {
  if (mode != "sim" && mode != "live") {
    throw validation_error("mode", "expected sim or live");
  }
  const scenario sc = load_scenario(scenario_path);
  const scenario_vehicle* self = nullptr;
  for (const auto& v : sc.vehicles) {
    if (v.id == id) self = &v;
  }
  if (self == nullptr) {
    throw validation_error("id", "'" + id + "' is not in the scenario");
  }

  const fs::path dir(out_dir);
  fs::create_directories(dir);

  event_log log;
  std::ofstream log_sink((dir / (id + "_events.log")).string());
  if (log_sink) log.set_sink(&log_sink);

  const auto [host, port] = parse_hostport(manager_addr);
  std::shared_ptr<transport_endpoint> endpoint;
  for (int attempt = 0;; ++attempt) {
    try {
      endpoint = tcp_connect(host, port);
      break;
    } catch (const runtime_fault&) {
      if (attempt >= 50) throw;  // ~5 s of retries, then surface the fault
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
  }

  thread_scheduler sched;
  const closed_loop_setup setup = to_closed_loop(sc);

  agent_config cfg;
  cfg.id = id;
  cfg.name = name.empty() ? self->name : name;
  cfg.send_rate_hz = 20.0;
  cfg.control_rate_hz = 1.0 / sc.sim.dt_s;
  cfg.params = sc.params;
  cfg.spacing = sc.spacing;
  cfg.graph = scenario_graph(sc);
  cfg.fleet_ids = setup.ids;
  cfg.base_order = *setup.order;
  cfg.junction = sc.junction;
  cfg.length_m = self->length_m;
  cfg.integrator = sc.sim.integrator;
  cfg.input_clamp_mps2 = sc.sim.input_clamp_mps2;
  cfg.integrate_dynamics = mode == "sim";

  vehicle_agent agent(cfg, sched, log);
  agent.attach(endpoint);
  agent.start(self->p0_m, self->v0_mps);

  if (mode == "live") {
    // External state feed: trajectory CSV rows on stdin; rows for other
    // vehicles are ignored. The thread parks on stdin, so it is detached
    // and dies with the process.
    std::thread([&agent, id] {
      std::string line;
      if (!std::getline(std::cin, line)) return;  // header
      while (std::getline(std::cin, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 8 || fields[1] != id) continue;
        try {
          vehicle_state state;
          state.progress_m = std::stod(fields[2]);
          state.speed_mps = std::stod(fields[3]);
          state.input_mps2 = std::stod(fields[4]);
          agent.feed_state(state);
        } catch (const std::exception&) {
          // malformed feed row: keep the previous state
        }
      }
    }).detach();
  }

  const double run_for = duration_s > 0.0 ? duration_s : sc.sim.duration_s;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  const auto start = std::chrono::steady_clock::now();
  while (!g_interrupted.load()) {
    const std::chrono::duration<double> elapsed =
        std::chrono::steady_clock::now() - start;
    if (elapsed.count() >= run_for) break;
    if (agent.rejected()) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }

  agent.stop();
  sched.stop();

  write_trajectory_csv((dir / (id + "_trajectory.csv")).string(),
                       agent.rows());
  write_delay_csv((dir / (id + "_delays.csv")).string(), agent.delays());
  write_accepted_csv((dir / (id + "_accepted.csv")).string(),
                     agent.accepted());

  if (agent.rejected()) {
    std::cerr << "subscription rejected: " << agent.rejection_reason()
              << '\n';
    return kExitValidation;
  }
  if (!agent.subscribed()) {
    std::cerr << "never subscribed to the manager\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_report(const std::string& dir_path, const std::string& scenario_path,
               double threshold_m, double hold_s) {
  const scenario sc = load_scenario(scenario_path);
  const fs::path dir(dir_path);
  if (!fs::is_directory(dir)) {
    throw runtime_fault("not a directory: " + dir_path);
  }

  std::vector<trajectory_row> rows;
  std::vector<delay_row> delays;
  std::vector<fs::path> row_files;
  std::vector<fs::path> delay_files;
  if (fs::exists(dir / "trajectory.csv")) {
    row_files.push_back(dir / "trajectory.csv");
  }
  if (fs::exists(dir / "delays.csv")) delay_files.push_back(dir / "delays.csv");
  if (row_files.empty()) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      const std::string n = entry.path().filename().string();
      if (n.size() > 15 && n.ends_with("_trajectory.csv")) {
        row_files.push_back(entry.path());
      }
      if (n.size() > 11 && n.ends_with("_delays.csv")) {
        delay_files.push_back(entry.path());
      }
    }
    std::sort(row_files.begin(), row_files.end());
    std::sort(delay_files.begin(), delay_files.end());
  }
  if (row_files.empty()) {
    throw runtime_fault("no trajectory logs in " + dir_path);
  }
  for (const auto& f : row_files) {
    const auto part = read_trajectory_csv(f.string());
    rows.insert(rows.end(), part.begin(), part.end());
  }
  for (const auto& f : delay_files) {
    const auto part = read_delay_csv(f.string());
    delays.insert(delays.end(), part.begin(), part.end());
  }

  const run_analysis a = analyze_run(sc, rows, delays, threshold_m, hold_s);
  write_analysis_artifacts(dir, sc, a);
  std::cout << format_report(a.report);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cooperative intersection crossing toolkit"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = "out";
  std::int64_t seed = -1;
  bool uncontrolled = false;
  network_flags net;
  double threshold_m = 0.1;
  double hold_s = 2.0;

  auto* simulate = app.add_subcommand(
      "simulate", "run the distributed simulation under a virtual clock");
  simulate->add_option("--scenario", scenario_path, "scenario file")
      ->required();
  simulate->add_option("--out", out_dir, "output directory");
  simulate->add_option("--seed", seed, "override scenario seeds");
  simulate->add_flag("--uncontrolled", uncontrolled,
                     "open-loop rollout at the initial speeds");
  simulate->add_option("--delay-model", net.model,
                       "constant|normal|lognormal");
  simulate->add_option("--delay-mean", net.mean_ms, "one-way mean delay ms");
  simulate->add_option("--delay-std", net.std_ms, "delay std ms (normal)");
  simulate->add_option("--delay-mu", net.mu, "log-space mu (lognormal)");
  simulate->add_option("--delay-sigma", net.sigma,
                       "log-space sigma (lognormal)");
  simulate->add_option("--reorder-p", net.reorder_p,
                       "adjacent-delivery swap probability");
  simulate->add_option("--network-seed", net.seed, "delay sampling seed");
  simulate->add_option("--settle-threshold", threshold_m,
                       "settling band half-width m");
  simulate->add_option("--settle-hold", hold_s, "settling hold window s");

  std::string bind = "127.0.0.1:0";
  double rate_hz = 20.0;
  std::int64_t stale_ms = 500;
  std::string port_file;
  std::string log_file;
  double serve_duration_s = 0.0;

  auto* serve =
      app.add_subcommand("serve", "run the traffic manager on a socket");
  serve->add_option("--bind", bind, "host:port (port 0 = ephemeral)");
  serve->add_option("--rate-hz", rate_hz, "broadcast rate");
  serve->add_option("--stale-ms", stale_ms, "staleness timeout");
  serve->add_option("--port-file", port_file,
                    "write the bound port to this file");
  serve->add_option("--log-file", log_file, "write the event log here");
  serve->add_option("--duration-s", serve_duration_s,
                    "exit after this long (0 = until signal)");

  std::string agent_id;
  std::string agent_name;
  std::string manager_addr = "127.0.0.1:7447";
  std::string mode = "sim";
  double agent_duration_s = 0.0;

  auto* agent = app.add_subcommand("agent", "run one vehicle agent");
  agent->add_option("--id", agent_id, "vehicle id (must be in the scenario)")
      ->required();
  agent->add_option("--name", agent_name, "display name");
  agent->add_option("--manager", manager_addr, "manager host:port");
  agent->add_option("--mode", mode, "sim|live");
  agent->add_option("--scenario", scenario_path, "scenario file")->required();
  agent->add_option("--out", out_dir, "output directory");
  agent->add_option("--duration-s", agent_duration_s,
                    "run time (default: scenario duration)");

  std::string report_dir;
  auto* report =
      app.add_subcommand("report", "recompute metrics over a run directory");
  report->add_option("--dir", report_dir, "run directory")->required();
  report->add_option("--scenario", scenario_path, "scenario file")
      ->required();
  report->add_option("--settle-threshold", threshold_m,
                     "settling band half-width m");
  report->add_option("--settle-hold", hold_s, "settling hold window s");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      return cmd_simulate(scenario_path, out_dir, seed, uncontrolled, net,
                          threshold_m, hold_s);
    }
    if (serve->parsed()) {
      return cmd_serve(bind, rate_hz, stale_ms, port_file, log_file,
                       serve_duration_s);
    }
    if (agent->parsed()) {
      return cmd_agent(agent_id, agent_name, manager_addr, mode,
                       scenario_path, out_dir, agent_duration_s);
    }
    if (report->parsed()) {
      return cmd_report(report_dir, scenario_path, threshold_m, hold_s);
    }
  } catch (const validation_error& err) {
    std::cerr << "validation: " << err.what() << '\n';
    return kExitValidation;
  } catch (const configuration_error& err) {
    std::cerr << "validation: " << err.what() << '\n';
    return kExitValidation;
  } catch (const decode_error& err) {
    std::cerr << "validation: " << err.what() << '\n';
    return kExitValidation;
  } catch (const domain_error& err) {
    std::cerr << "validation: " << err.what() << '\n';
    return kExitValidation;
  } catch (const runtime_fault& err) {
    std::cerr << "fault: " << err.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& err) {
    std::cerr << "fault: " << err.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}
