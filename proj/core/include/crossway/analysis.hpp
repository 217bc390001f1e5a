#pragma once

#include <string>
#include <vector>

#include "crossway/csvio.hpp"
#include "crossway/dynamics.hpp"
#include "crossway/metrics.hpp"
#include "crossway/scenario.hpp"

namespace crossway {

// One vehicle's samples extracted from a merged row stream, time-sorted.
struct vehicle_series {
  std::string id;
  std::vector<double> t_s;
  std::vector<double> p_m;
  std::vector<double> v_mps;
  std::vector<double> u_mps2;
};

std::vector<vehicle_series> split_rows(const std::vector<trajectory_row>& rows);

// Everything derived from one run: per-vehicle series resampled onto one
// grid, ground-truth pair errors, energy diagnostic, safety classification
// and the aggregate report.
struct run_analysis {
  std::vector<std::string> ids;  // scenario order
  std::vector<double> grid_s;
  std::vector<std::vector<double>> progress_m;  // [vehicle][grid]
  std::vector<std::vector<double>> speed_mps;
  std::vector<edge_channel> edges;  // follower first
  std::vector<std::vector<double>> edge_error_m;  // [edge][grid]
  std::vector<double> lyapunov;  // constant_gap runs only, else empty
  run_report report;
};

// Recomputes pairwise formation errors from the logged trajectories (linear
// interpolation onto a shared grid at the scenario step), detects settling,
// checks mutual exclusion, classifies every crossing-ordered vehicle pair
// and aggregates delay statistics. Throws validation_error when a scenario
// vehicle has fewer than two samples.
run_analysis analyze_run(const scenario& sc,
                         const std::vector<trajectory_row>& rows,
                         const std::vector<delay_row>& delays,
                         double settle_threshold_m = 0.1,
                         double settle_hold_s = 2.0);

// Plot-ready artifacts.
void write_errors_csv(const std::string& path, const run_analysis& a);
void write_lyapunov_csv(const std::string& path, const run_analysis& a);
// (pair, t_s, p_lead_m, p_follow_m) traces for every classified pair.
void write_collision_csv(const std::string& path, const scenario& sc,
                         const run_analysis& a);
void write_report_file(const std::string& path, const run_report& report);

}  // namespace crossway
