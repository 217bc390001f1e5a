#include "crossway/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "crossway/control.hpp"
#include "crossway/errors.hpp"
#include "crossway/junction.hpp"
#include "crossway/topology.hpp"

namespace crossway {

namespace {

// Linear interpolation on a sorted abscissa; clamps outside the range.
double interpolate(const std::vector<double>& t, const std::vector<double>& y,
                   double query) {
  if (query <= t.front()) return y.front();
  if (query >= t.back()) return y.back();
  const auto upper = std::upper_bound(t.begin(), t.end(), query);
  const std::size_t hi = static_cast<std::size_t>(upper - t.begin());
  const std::size_t lo = hi - 1;
  const double span = t[hi] - t[lo];
  if (span <= 0.0) return y[lo];
  const double w = (query - t[lo]) / span;
  return y[lo] + w * (y[hi] - y[lo]);
}

constexpr double kEnergyFloorFraction = 1e-8;  // V below this is numerical dust
constexpr double kDecayStrideS = 0.25;         // differencing stride for c-hat

}  // namespace

std::vector<vehicle_series> split_rows(
    const std::vector<trajectory_row>& rows) {
  std::map<std::string, vehicle_series> by_id;
  for (const auto& row : rows) {
    auto& series = by_id[row.vehicle_id];
    series.id = row.vehicle_id;
    series.t_s.push_back(row.t_s);
    series.p_m.push_back(row.p_m);
    series.v_mps.push_back(row.v_mps);
    series.u_mps2.push_back(row.u_mps2);
  }
  std::vector<vehicle_series> out;
  for (auto& [id, series] : by_id) {
    // Merged streams interleave vehicles but each vehicle's own ticks are
    // already ordered; sort defensively for externally produced files.
    std::vector<std::size_t> index(series.t_s.size());
    for (std::size_t k = 0; k < index.size(); ++k) index[k] = k;
    std::stable_sort(index.begin(), index.end(), [&](std::size_t a,
                                                     std::size_t b) {
      return series.t_s[a] < series.t_s[b];
    });
    vehicle_series sorted;
    sorted.id = series.id;
    for (const std::size_t k : index) {
      sorted.t_s.push_back(series.t_s[k]);
      sorted.p_m.push_back(series.p_m[k]);
      sorted.v_mps.push_back(series.v_mps[k]);
      sorted.u_mps2.push_back(series.u_mps2[k]);
    }
    out.push_back(std::move(sorted));
  }
  return out;
}

run_analysis analyze_run(const scenario& sc,
                         const std::vector<trajectory_row>& rows,
                         const std::vector<delay_row>& delays,
                         double settle_threshold_m, double settle_hold_s) {
  run_analysis a;
  const auto split = split_rows(rows);
  const auto find_series = [&](const std::string& id) -> const vehicle_series* {
    for (const auto& s : split) {
      if (s.id == id) return &s;
    }
    return nullptr;
  };

  std::vector<const vehicle_series*> series;
  for (const auto& v : sc.vehicles) {
    const vehicle_series* s = find_series(v.id);
    if (s == nullptr || s->t_s.size() < 2) {
      throw validation_error("rows", "vehicle '" + v.id +
                                         "' has fewer than two samples");
    }
    a.ids.push_back(v.id);
    series.push_back(s);
  }

  // Shared grid: the overlap of all vehicles' logs from the fleet epoch on.
  double start = 0.0;
  double stop = series.front()->t_s.back();
  for (const auto* s : series) {
    start = std::max(start, s->t_s.front());
    stop = std::min(stop, s->t_s.back());
  }
  if (stop <= start) {
    throw validation_error("rows", "vehicle logs do not overlap in time");
  }
  const double dt = sc.sim.dt_s;
  for (double t = start; t <= stop + 1e-9; t += dt) a.grid_s.push_back(t);

  for (const auto* s : series) {
    std::vector<double> p(a.grid_s.size());
    std::vector<double> v(a.grid_s.size());
    for (std::size_t k = 0; k < a.grid_s.size(); ++k) {
      p[k] = interpolate(s->t_s, s->p_m, a.grid_s[k]);
      v[k] = interpolate(s->t_s, s->v_mps, a.grid_s[k]);
    }
    a.progress_m.push_back(std::move(p));
    a.speed_mps.push_back(std::move(v));
  }

  const comm_graph graph = scenario_graph(sc);
  const closed_loop_setup setup = to_closed_loop(sc);
  const platoon_order& order = *setup.order;
  std::vector<int> rank(a.ids.size());
  for (std::size_t i = 0; i < a.ids.size(); ++i) {
    rank[i] = order.ranks.at(a.ids[i]);
  }

  for (int i = 1; i <= graph.n; ++i) {
    for (int j = i + 1; j <= graph.n; ++j) {
      if (!graph.edge(i, j)) continue;
      edge_channel ch;
      const std::size_t ii = static_cast<std::size_t>(i) - 1;
      const std::size_t jj = static_cast<std::size_t>(j) - 1;
      ch.follower = rank[ii] > rank[jj] ? static_cast<int>(ii)
                                        : static_cast<int>(jj);
      ch.leader = rank[ii] > rank[jj] ? static_cast<int>(jj)
                                      : static_cast<int>(ii);
      a.edges.push_back(ch);
    }
  }
  for (const auto& ch : a.edges) {
    std::vector<double> e(a.grid_s.size());
    const auto f = static_cast<std::size_t>(ch.follower);
    const auto l = static_cast<std::size_t>(ch.leader);
    for (std::size_t k = 0; k < a.grid_s.size(); ++k) {
      const double gap =
          desired_gap(sc.spacing, a.speed_mps[f][k],
                      rank[l] - rank[f]);
      e[k] = a.progress_m[f][k] - a.progress_m[l][k] - gap;
    }
    a.edge_error_m.push_back(std::move(e));
  }

  run_report& report = a.report;
  report.settling_time_s =
      detect_settling(a.grid_s, a.edge_error_m, settle_threshold_m,
                      settle_hold_s);

  if (sc.junction) {
    std::vector<trajectory_series> trajectories;
    for (std::size_t i = 0; i < a.ids.size(); ++i) {
      trajectories.push_back(
          {a.ids[i], sc.vehicles[i].length_m, a.progress_m[i]});
    }
    const auto violations =
        mutual_exclusion_violations(a.grid_s, trajectories, *sc.junction);
    report.mutex_violation_count = violations.size();
    report.mutual_exclusion_ok = violations.empty();

    // Classify every pair, lead = earlier crossing rank.
    for (std::size_t i = 0; i < a.ids.size(); ++i) {
      for (std::size_t j = i + 1; j < a.ids.size(); ++j) {
        const std::size_t lead = rank[i] < rank[j] ? i : j;
        const std::size_t follow = rank[i] < rank[j] ? j : i;
        const auto klass = collision_region_trace(
            trajectories[lead], trajectories[follow], *sc.junction);
        report.collision_classifications.emplace_back(
            a.ids[lead] + "->" + a.ids[follow], klass);
      }
    }
  }

  if (sc.spacing.mode == spacing_mode::constant_gap) {
    a.lyapunov.resize(a.grid_s.size());
    for (std::size_t k = 0; k < a.grid_s.size(); ++k) {
      double mean_v = 0.0;
      for (const auto& v : a.speed_mps) mean_v += v[k];
      mean_v /= static_cast<double>(a.speed_mps.size());
      std::vector<pair_error> pairs;
      std::vector<double> deviations;
      for (std::size_t i = 0; i < a.ids.size(); ++i) {
        deviations.push_back(a.speed_mps[i][k] - mean_v);
        for (std::size_t j = 0; j < a.ids.size(); ++j) {
          if (i == j || !graph.edge(static_cast<int>(i) + 1,
                                    static_cast<int>(j) + 1)) {
            continue;
          }
          const double gap = desired_gap(sc.spacing, a.speed_mps[i][k],
                                         rank[j] - rank[i]);
          pairs.push_back(
              {a.progress_m[i][k] - a.progress_m[j][k] - gap, 1.0});
        }
      }
      a.lyapunov[k] =
          lyapunov_value(pairs, deviations, sc.params, sc.spacing.mode);
    }

    const double v0 = a.lyapunov.front();
    report.v0 = v0;
    std::vector<lyapunov_sample> sparse;
    const std::size_t stride =
        std::max<std::size_t>(1, static_cast<std::size_t>(kDecayStrideS / dt));
    for (std::size_t k = 0; k < a.lyapunov.size(); k += stride) {
      if (a.lyapunov[k] <= kEnergyFloorFraction * v0) break;
      sparse.push_back({a.grid_s[k], a.lyapunov[k]});
    }
    if (sparse.size() >= 2) {
      const double c_hat = estimate_c(sparse, sc.params);
      report.c_hat = c_hat;
      if (c_hat > 0.0) {
        report.settling_bound_s = settling_time_bound(v0, c_hat, sc.params);
      }
    }
  }

  std::map<delay_kind, std::vector<double>> grouped;
  for (const auto& d : delays) grouped[d.kind].push_back(d.value_ms);
  for (const auto& [kind, values] : grouped) {
    if (values.size() >= 2) report.delay_stats[kind] = stats(values);
  }

  report.notes.emplace_back("settling_threshold_m",
                            format_double(settle_threshold_m));
  report.notes.emplace_back("settling_hold_s", format_double(settle_hold_s));
  report.notes.emplace_back("grid_dt_s", format_double(dt));
  report.notes.emplace_back("vehicles", std::to_string(a.ids.size()));
  return a;
}

void write_errors_csv(const std::string& path, const run_analysis& a) {
  std::ofstream out(path);
  if (!out) throw runtime_fault("cannot open for writing: " + path);
  out << "t_s";
  for (const auto& ch : a.edges) {
    out << ",e_" << a.ids[static_cast<std::size_t>(ch.follower)] << '_'
        << a.ids[static_cast<std::size_t>(ch.leader)] << "_m";
  }
  out << '\n';
  for (std::size_t k = 0; k < a.grid_s.size(); ++k) {
    out << format_double(a.grid_s[k]);
    for (const auto& e : a.edge_error_m) out << ',' << format_double(e[k]);
    out << '\n';
  }
}

void write_lyapunov_csv(const std::string& path, const run_analysis& a) {
  std::ofstream out(path);
  if (!out) throw runtime_fault("cannot open for writing: " + path);
  out << "t_s,v\n";
  for (std::size_t k = 0; k < a.lyapunov.size(); ++k) {
    out << format_double(a.grid_s[k]) << ',' << format_double(a.lyapunov[k])
        << '\n';
  }
}

void write_collision_csv(const std::string& path, const scenario& sc,
                         const run_analysis& a) {
  std::ofstream out(path);
  if (!out) throw runtime_fault("cannot open for writing: " + path);
  out << "pair,t_s,p_lead_m,p_follow_m\n";
  if (!sc.junction) return;
  const closed_loop_setup setup = to_closed_loop(sc);
  const platoon_order& order = *setup.order;
  for (std::size_t i = 0; i < a.ids.size(); ++i) {
    for (std::size_t j = i + 1; j < a.ids.size(); ++j) {
      const bool i_leads = order.ranks.at(a.ids[i]) < order.ranks.at(a.ids[j]);
      const std::size_t lead = i_leads ? i : j;
      const std::size_t follow = i_leads ? j : i;
      const std::string pair = a.ids[lead] + "->" + a.ids[follow];
      for (std::size_t k = 0; k < a.grid_s.size(); ++k) {
        out << pair << ',' << format_double(a.grid_s[k]) << ','
            << format_double(a.progress_m[lead][k]) << ','
            << format_double(a.progress_m[follow][k]) << '\n';
      }
    }
  }
}

void write_report_file(const std::string& path, const run_report& report) {
  std::ofstream out(path);
  if (!out) throw runtime_fault("cannot open for writing: " + path);
  out << format_report(report);
}

}  // namespace crossway
