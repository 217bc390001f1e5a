#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "crossway/errors.hpp"
#include "crossway/protocol.hpp"

using namespace crossway;

namespace {

status_message random_status(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> coord(-180.0, 180.0);
  std::uniform_real_distribution<double> heading(0.0, 359.999);
  std::uniform_real_distribution<double> speed(-30.0, 30.0);
  std::uniform_real_distribution<double> pos(-500.0, 500.0);
  std::uniform_real_distribution<double> lat(0.0, 400.0);
  status_message m;
  m.type = static_cast<vehicle_type>(gen() % 3);
  m.vehicle_name = "veh_" + std::to_string(gen() % 1000);
  m.gnss_lat = coord(gen);
  m.gnss_lon = coord(gen);
  m.gnss_heading = heading(gen);
  m.speed_lat = speed(gen);
  m.speed_lon = speed(gen);
  m.proximity_m = pos(gen);
  m.connection_status = gen() % 2 ? link_status::active : link_status::inactive;
  m.latency_ms = lat(gen);
  m.local_timestamp_ms = static_cast<std::int64_t>(gen() % 100000000);
  m.local_sequence = gen() % 100000;
  return m;
}

}  // namespace

TEST_CASE("status messages survive an encode/decode round trip") {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 100; ++trial) {
    const status_message m = random_status(gen);
    CHECK(decode_status(encode(m)) == m);
  }
}

TEST_CASE("traffic updates survive an encode/decode round trip") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 50; ++trial) {
    traffic_update u;
    u.connected_nodes = static_cast<std::int64_t>(gen() % 10);
    u.global_sequence = gen() % 100000;
    u.global_timestamp_ms = static_cast<std::int64_t>(gen() % 100000000);
    if (gen() % 2) u.control_side_info["priority_vehicle"] = "v2";
    const int n = static_cast<int>(gen() % 4);
    for (int k = 0; k < n; ++k) u.vehicles.push_back(random_status(gen));
    CHECK(decode_update(encode(u)) == u);
  }
}

TEST_CASE("subscription handshake messages round-trip") {
  const subscription_request req{"v7", "silver hatchback"};
  CHECK(decode_subscription(encode(req)) == req);
  const subscription_ack yes{true, ""};
  const subscription_ack no{false, "id 'v7' already subscribed"};
  CHECK(decode_ack(encode(yes)) == yes);
  CHECK(decode_ack(encode(no)) == no);
}

TEST_CASE("malformed bytes raise a positioned decode error") {
  try {
    decode_status("{\"vehicle_name\": ");
    FAIL("expected decode_error");
  } catch (const decode_error& err) {
    CHECK(err.byte_offset > 0);
  }
  CHECK_THROWS_AS(decode_status(""), decode_error);
  CHECK_THROWS_AS(decode_update("[1,2,3"), decode_error);
}

TEST_CASE("field validation names the offending field") {
  status_message m;
  m.vehicle_name = "v1";

  SUBCASE("heading outside [0, 360)") {
    m.gnss_heading = 360.0;
    try {
      decode_status(encode(m));
      FAIL("expected validation_error");
    } catch (const validation_error& err) {
      CHECK(err.field == "gnss_heading");
    }
  }

  SUBCASE("negative latency") {
    m.latency_ms = -1.0;
    try {
      decode_status(encode(m));
      FAIL("expected validation_error");
    } catch (const validation_error& err) {
      CHECK(err.field == "latency_ms");
    }
  }

  SUBCASE("missing field") {
    try {
      decode_status("{\"vehicle_name\": \"v1\"}");
      FAIL("expected validation_error");
    } catch (const validation_error& err) {
      CHECK_FALSE(err.field.empty());
    }
  }

  SUBCASE("unknown enum value") {
    std::string bytes = encode(m);
    const auto at = bytes.find("autonomous");
    bytes.replace(at, 10, "hovercraft");
    CHECK_THROWS_AS(decode_status(bytes), validation_error);
  }

  SUBCASE("empty subscription id") {
    CHECK_THROWS_AS(decode_subscription("{\"id\": \"\", \"name\": \"x\"}"),
                    validation_error);
  }
}

TEST_CASE("unknown fields are ignored") {
  status_message m;
  m.vehicle_name = "v1";
  std::string bytes = encode(m);
  bytes.insert(1, "\"future_extension\": [1, 2, 3], ");
  CHECK(decode_status(bytes) == m);
}

TEST_CASE("late-predecessor rule on single packets") {
  CHECK(accept_packet(std::nullopt, 0) == packet_decision::accept);
  CHECK(accept_packet(std::nullopt, 41) == packet_decision::accept);
  CHECK(accept_packet(5, 6) == packet_decision::accept);
  CHECK(accept_packet(5, 50) == packet_decision::accept);
  CHECK(accept_packet(5, 5) == packet_decision::discard);
  CHECK(accept_packet(5, 4) == packet_decision::discard);
  CHECK(accept_packet(5, 0) == packet_decision::discard);
}

TEST_CASE("accepted subsequence is increasing for every arrival order") {
  // Property: feed 50 distinct sequence numbers in random order. Whatever
  // the permutation, the accepted subsequence is strictly increasing, starts
  // at the first arrival and ends at the global maximum.
  std::mt19937_64 gen(123);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::uint64_t> seqs(50);
    std::iota(seqs.begin(), seqs.end(), trial % 7);
    std::shuffle(seqs.begin(), seqs.end(), gen);

    std::optional<std::uint64_t> last;
    std::vector<std::uint64_t> accepted;
    for (std::uint64_t s : seqs) {
      if (accept_packet(last, s) == packet_decision::accept) {
        accepted.push_back(s);
        last = s;
      }
    }
    REQUIRE(!accepted.empty());
    REQUIRE(accepted.front() == seqs.front());
    REQUIRE(accepted.back() == *std::max_element(seqs.begin(), seqs.end()));
    for (std::size_t k = 0; k + 1 < accepted.size(); ++k) {
      REQUIRE(accepted[k] < accepted[k + 1]);
    }
  }
}

TEST_CASE("duplicates are always discarded") {
  std::optional<std::uint64_t> last;
  for (std::uint64_t s : {3ull, 3ull, 7ull, 7ull, 7ull, 9ull}) {
    if (accept_packet(last, s) == packet_decision::accept) last = s;
  }
  CHECK(last == 9);
}

TEST_CASE("global sequence counter starts at zero and increments") {
  sequence_counter counter;
  CHECK(next_global_sequence(counter) == 0);
  CHECK(next_global_sequence(counter) == 1);
  CHECK(next_global_sequence(counter) == 2);
}

TEST_CASE("enum names round-trip through their strings") {
  CHECK(std::string(to_string(vehicle_type::autonomous)) == "autonomous");
  CHECK(std::string(to_string(vehicle_type::human_driven_connected)) ==
        "human_driven_connected");
  CHECK(std::string(to_string(vehicle_type::monitor)) == "monitor");
  CHECK(std::string(to_string(link_status::active)) == "active");
  CHECK(std::string(to_string(link_status::inactive)) == "inactive");
}
