#include <doctest.h>

#include <cmath>
#include <vector>

#include "crossway/errors.hpp"
#include "crossway/junction.hpp"

using namespace crossway;

namespace {

junction_geometry geom(double cz = 150.0, double ca = 6.0, int roads = 4) {
  junction_geometry g;
  g.roads = roads;
  g.cz_radius_m = cz;
  g.ca_half_length_m = ca;
  return g;
}

trajectory_series line(std::string id, double length, double p0, double v,
                       const std::vector<double>& time_s) {
  trajectory_series s;
  s.id = std::move(id);
  s.length_m = length;
  for (double t : time_s) s.progress_m.push_back(p0 + v * t);
  return s;
}

}  // namespace

TEST_CASE("geometry validation") {
  CHECK_NOTHROW(validate(geom()));
  CHECK_THROWS_AS(validate(geom(0.0)), validation_error);
  CHECK_THROWS_AS(validate(geom(150.0, 0.0)), validation_error);
  CHECK_THROWS_AS(validate(geom(5.0, 6.0)), validation_error);  // CA beyond CZ
  CHECK_THROWS_AS(validate(geom(150.0, 6.0, 1)), validation_error);
}

TEST_CASE("vehicle spec validation names the offending field") {
  vehicle_spec ok{"v1", 4.6, 1, 2};
  CHECK_NOTHROW(validate(ok, 4));
  vehicle_spec bad_len{"v1", 0.0, 1, 2};
  CHECK_THROWS_AS(validate(bad_len, 4), validation_error);
  vehicle_spec bad_road{"v1", 4.6, 5, 2};
  CHECK_THROWS_AS(validate(bad_road, 4), validation_error);
  vehicle_spec no_id{"", 4.6, 1, 2};
  CHECK_THROWS_AS(validate(no_id, 4), validation_error);
}

TEST_CASE("progress is negative on approach, positive past the center") {
  CHECK(progress_from_distance(120.0, true) == -120.0);
  CHECK(progress_from_distance(120.0, false) == 120.0);
  CHECK(progress_from_distance(0.0, true) == 0.0);
  CHECK_THROWS_AS(progress_from_distance(-1.0, true), domain_error);
}

TEST_CASE("crossing order ranks by distance to the center") {
  const platoon_order order = assign_crossing_order(
      {{"a", -30.0}, {"b", -10.0}, {"c", 20.0}});
  CHECK(order.ranks.at("b") == 1);
  CHECK(order.ranks.at("c") == 2);
  CHECK(order.ranks.at("a") == 3);
}

TEST_CASE("crossing-order ties break by ascending id") {
  const platoon_order order =
      assign_crossing_order({{"z", -15.0}, {"a", 15.0}, {"m", -20.0}});
  CHECK(order.ranks.at("a") == 1);
  CHECK(order.ranks.at("z") == 2);
  CHECK(order.ranks.at("m") == 3);
}

TEST_CASE("prioritizing moves a vehicle to rank 1 and preserves the rest") {
  platoon_order order;
  order.ranks = {{"a", 1}, {"b", 2}, {"c", 3}, {"d", 4}};
  const platoon_order after = prioritize(order, "c");
  CHECK(after.ranks.at("c") == 1);
  CHECK(after.ranks.at("a") == 2);
  CHECK(after.ranks.at("b") == 3);
  CHECK(after.ranks.at("d") == 4);

  const platoon_order unchanged = prioritize(order, "nobody");
  CHECK(unchanged.ranks == order.ranks);
  const platoon_order same = prioritize(order, "a");
  CHECK(same.ranks == order.ranks);
}

TEST_CASE("cooperation zone boundary is inclusive") {
  const junction_geometry g = geom(150.0);
  CHECK(in_cooperation_zone(-150.0, g));
  CHECK(in_cooperation_zone(150.0, g));
  CHECK(in_cooperation_zone(0.0, g));
  CHECK_FALSE(in_cooperation_zone(-150.0001, g));
  CHECK_FALSE(in_cooperation_zone(150.0001, g));
}

TEST_CASE("conflicting-area occupancy covers the body, boundaries exclusive") {
  const junction_geometry g = geom(150.0, 6.0);
  const double len = 4.6;
  // Front bumper enters at p = -6 - 4.6 (rear at the entry edge).
  CHECK_FALSE(ca_occupancy(-10.6, len, g));
  CHECK(ca_occupancy(-10.5999, len, g));
  CHECK(ca_occupancy(0.0, len, g));
  CHECK(ca_occupancy(5.9999, len, g));
  CHECK_FALSE(ca_occupancy(6.0, len, g));
  CHECK_FALSE(ca_occupancy(100.0, len, g));
}

TEST_CASE("mutual exclusion flags simultaneous occupancy only") {
  const junction_geometry g = geom(150.0, 6.0);
  std::vector<double> time_s;
  for (int k = 0; k <= 400; ++k) time_s.push_back(0.1 * k);

  SUBCASE("two vehicles crossing together violate") {
    const auto a = line("a", 4.6, -50.0, 10.0, time_s);
    const auto b = line("b", 4.6, -52.0, 10.0, time_s);
    const auto violations = mutual_exclusion_violations(time_s, {a, b}, g);
    CHECK(violations.size() > 0);
    CHECK(violations.front().first_id == "a");
    CHECK(violations.front().second_id == "b");
  }

  SUBCASE("well-separated crossings are clean") {
    const auto a = line("a", 4.6, -50.0, 10.0, time_s);
    const auto b = line("b", 4.6, -90.0, 10.0, time_s);
    CHECK(mutual_exclusion_violations(time_s, {a, b}, g).empty());
  }

  SUBCASE("grid length mismatch is rejected") {
    auto a = line("a", 4.6, -50.0, 10.0, time_s);
    a.progress_m.pop_back();
    const auto b = line("b", 4.6, -90.0, 10.0, time_s);
    CHECK_THROWS_AS(mutual_exclusion_violations(time_s, {a, b}, g),
                    validation_error);
  }
}

TEST_CASE("collision-region trace classifies enter, touch and avoid") {
  const junction_geometry g = geom(150.0, 6.0);
  std::vector<double> time_s;
  for (int k = 0; k <= 600; ++k) time_s.push_back(0.05 * k);

  SUBCASE("co-occupancy enters the region") {
    const auto lead = line("lead", 4.6, -40.0, 10.0, time_s);
    const auto follow = line("follow", 4.6, -43.0, 10.0, time_s);
    CHECK(collision_region_trace(lead, follow, g) == collision_class::enters);
  }

  SUBCASE("a wide pass avoids the region") {
    const auto lead = line("lead", 4.6, -40.0, 10.0, time_s);
    const auto follow = line("follow", 4.6, -120.0, 10.0, time_s);
    CHECK(collision_region_trace(lead, follow, g) == collision_class::avoids);
  }

  SUBCASE("passing within the tolerance touches") {
    // Follower's front bumper reaches the entry edge just as the leader's
    // rear clears the exit: offset = full region span plus a hair.
    const double span = 6.0 + 4.6 + 6.0;  // entry-to-exit for one body
    const auto lead = line("lead", 4.6, -40.0, 10.0, time_s);
    const auto follow = line("follow", 4.6, -40.0 - span - 0.2, 10.0, time_s);
    CHECK(collision_region_trace(lead, follow, g) ==
          collision_class::touches);
  }
}

TEST_CASE("collision class names") {
  CHECK(std::string(to_string(collision_class::avoids)) == "avoids");
  CHECK(std::string(to_string(collision_class::touches)) == "touches");
  CHECK(std::string(to_string(collision_class::enters)) == "enters");
}
