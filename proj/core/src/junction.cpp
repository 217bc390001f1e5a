#include "crossway/junction.hpp"

#include <algorithm>
#include <cmath>

#include "crossway/errors.hpp"

namespace crossway {

void validate(const junction_geometry& geom) {
  if (geom.roads < 2) {
    throw validation_error("junction.roads", "at least 2 roads required");
  }
  if (!(geom.ca_half_length_m > 0.0)) {
    throw validation_error("junction.ca_half_length_m", "must be > 0");
  }
  if (!(geom.cz_radius_m > geom.ca_half_length_m)) {
    throw validation_error("junction.cz_radius_m",
                           "must exceed ca_half_length_m");
  }
}

void validate(const vehicle_spec& spec, int roads) {
  if (spec.id.empty()) {
    throw validation_error("vehicle.id", "must be non-empty");
  }
  if (!(spec.length_m > 0.0)) {
    throw validation_error("vehicle.length_m", "must be > 0");
  }
  if (spec.entry_road < 1 || spec.entry_road > roads) {
    throw validation_error("vehicle.entry_road", "out of range");
  }
  if (spec.exit_road < 1 || spec.exit_road > roads) {
    throw validation_error("vehicle.exit_road", "out of range");
  }
}

double progress_from_distance(double distance_to_center_m, bool approaching) {
  if (!(distance_to_center_m >= 0.0)) {
    throw domain_error("progress_from_distance: distance must be >= 0");
  }
  return approaching ? -distance_to_center_m : distance_to_center_m;
}

platoon_order assign_crossing_order(
    const std::vector<std::pair<std::string, double>>& id_progress) {
  std::vector<std::pair<std::string, double>> sorted = id_progress;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    const double da = std::fabs(a.second);
    const double db = std::fabs(b.second);
    if (da != db) return da < db;
    return a.first < b.first;
  });
  platoon_order order;
  int rank = 1;
  for (const auto& [id, p] : sorted) order.ranks[id] = rank++;
  return order;
}

platoon_order prioritize(const platoon_order& order,
                         const std::string& vehicle) {
  const auto it = order.ranks.find(vehicle);
  if (it == order.ranks.end()) return order;
  const int old_rank = it->second;
  platoon_order out = order;
  for (auto& [id, rank] : out.ranks) {
    if (id == vehicle) {
      rank = 1;
    } else if (rank < old_rank) {
      ++rank;
    }
  }
  return out;
}

bool in_cooperation_zone(double progress_m, const junction_geometry& geom) {
  return std::fabs(progress_m) <= geom.cz_radius_m;
}

bool ca_occupancy(double progress_m, double length_m,
                  const junction_geometry& geom) {
  return progress_m > -(geom.ca_half_length_m + length_m) &&
         progress_m < geom.ca_half_length_m;
}

std::vector<mutex_violation> mutual_exclusion_violations(
    const std::vector<double>& time_s,
    const std::vector<trajectory_series>& trajectories,
    const junction_geometry& geom) {
  for (const auto& traj : trajectories) {
    if (traj.progress_m.size() != time_s.size()) {
      throw validation_error(
          "trajectory." + traj.id,
          "series length " + std::to_string(traj.progress_m.size()) +
              " does not match the time grid length " +
              std::to_string(time_s.size()));
    }
  }
  std::vector<mutex_violation> out;
  for (std::size_t k = 0; k < time_s.size(); ++k) {
    for (std::size_t a = 0; a < trajectories.size(); ++a) {
      if (!ca_occupancy(trajectories[a].progress_m[k],
                        trajectories[a].length_m, geom)) {
        continue;
      }
      for (std::size_t b = a + 1; b < trajectories.size(); ++b) {
        if (ca_occupancy(trajectories[b].progress_m[k],
                         trajectories[b].length_m, geom)) {
          out.push_back(
              {time_s[k], trajectories[a].id, trajectories[b].id});
        }
      }
    }
  }
  return out;
}

collision_class collision_region_trace(const trajectory_series& lead,
                                       const trajectory_series& follow,
                                       const junction_geometry& geom,
                                       double tolerance_m) {
  if (lead.progress_m.size() != follow.progress_m.size()) {
    throw validation_error("trajectory." + follow.id,
                           "series not aligned with " + lead.id);
  }
  // Occupancy box per axis: (-ca_half - L, +ca_half), open.
  const auto axis_distance = [&](double p, double length) {
    const double lo = -(geom.ca_half_length_m + length);
    const double hi = geom.ca_half_length_m;
    if (p < lo) return lo - p;
    if (p > hi) return p - hi;
    return 0.0;
  };
  bool touched = false;
  for (std::size_t k = 0; k < lead.progress_m.size(); ++k) {
    const bool lead_in = ca_occupancy(lead.progress_m[k], lead.length_m, geom);
    const bool follow_in =
        ca_occupancy(follow.progress_m[k], follow.length_m, geom);
    if (lead_in && follow_in) return collision_class::enters;
    const double d = std::max(axis_distance(lead.progress_m[k], lead.length_m),
                              axis_distance(follow.progress_m[k],
                                            follow.length_m));
    if (d <= tolerance_m) touched = true;
  }
  return touched ? collision_class::touches : collision_class::avoids;
}

const char* to_string(collision_class c) {
  switch (c) {
    case collision_class::avoids: return "avoids";
    case collision_class::touches: return "touches";
    case collision_class::enters: return "enters";
  }
  return "unknown";
}

}  // namespace crossway
