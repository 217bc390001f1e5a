#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace crossway {

// 1-D abstraction of the intersection: every trajectory crosses a shared
// conflicting area of half-length ca_half_length_m centered at progress 0,
// and vehicles cooperate while inside a circle of radius cz_radius_m.
struct junction_geometry {
  int roads = 2;
  double cz_radius_m = 0.0;
  double ca_half_length_m = 0.0;
};

void validate(const junction_geometry& geom);

struct vehicle_spec {
  std::string id;
  double length_m = 0.0;
  int entry_road = 1;
  int exit_road = 1;
};

void validate(const vehicle_spec& spec, int roads);

// Crossing order: rank 1 crosses first.
struct platoon_order {
  std::map<std::string, int> ranks;
};

// Signed progress along the trajectory: negative while approaching the
// trajectory midpoint, positive after it.
double progress_from_distance(double distance_to_center_m, bool approaching);

// Rank 1 = smallest |progress|; ties broken by ascending vehicle id.
platoon_order assign_crossing_order(
    const std::vector<std::pair<std::string, double>>& id_progress);

// Moves `vehicle` to rank 1, shifting everyone previously ahead of it back
// by one; relative order of the rest is preserved. Unknown id is a no-op.
platoon_order prioritize(const platoon_order& order,
                         const std::string& vehicle);

// |p| <= cz_radius_m, boundary inclusive.
bool in_cooperation_zone(double progress_m, const junction_geometry& geom);

// True iff the vehicle body overlaps the conflicting area:
// p in (-ca_half - length, +ca_half), both boundaries exclusive (front
// bumper past entry, rear bumper not yet past exit).
bool ca_occupancy(double progress_m, double length_m,
                  const junction_geometry& geom);

// One vehicle's progress samples on the shared time grid.
struct trajectory_series {
  std::string id;
  double length_m = 0.0;
  std::vector<double> progress_m;
};

struct mutex_violation {
  double time_s = 0.0;
  std::string first_id;
  std::string second_id;
};

// Every (timestamp, vehicle pair) where two bodies overlap the conflicting
// area simultaneously. Empty result = safe run. All series must share the
// time grid.
std::vector<mutex_violation> mutual_exclusion_violations(
    const std::vector<double>& time_s,
    const std::vector<trajectory_series>& trajectories,
    const junction_geometry& geom);

enum class collision_class { avoids, touches, enters };

// Classifies the sampled (p_lead, p_follow) curve against the square region
// where both vehicles occupy the conflicting area: `enters` if any sample is
// strictly inside, `touches` if any sample comes within `tolerance_m` of the
// closed region (Chebyshev distance), otherwise `avoids`.
collision_class collision_region_trace(const trajectory_series& lead,
                                       const trajectory_series& follow,
                                       const junction_geometry& geom,
                                       double tolerance_m = 0.5);

const char* to_string(collision_class c);

}  // namespace crossway
