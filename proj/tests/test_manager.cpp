#include <doctest.h>

#include <memory>
#include <string>
#include <vector>

#include "crossway/errors.hpp"
#include "crossway/event_log.hpp"
#include "crossway/manager.hpp"
#include "crossway/protocol.hpp"
#include "crossway/transport.hpp"

using namespace crossway;

namespace {

status_message status_of(const std::string& name, std::uint64_t seq,
                         std::int64_t ts_ms, double proximity = -100.0) {
  status_message m;
  m.vehicle_name = name;
  m.proximity_m = proximity;
  m.speed_lon = 10.0;
  m.local_timestamp_ms = ts_ms;
  m.local_sequence = seq;
  return m;
}

// One scripted client on a zero-delay simulated link.
struct scripted_client {
  std::shared_ptr<transport_endpoint> endpoint;
  std::vector<std::string> frames;
  bool disconnected = false;

  explicit scripted_client(std::shared_ptr<transport_endpoint> ep)
      : endpoint(std::move(ep)) {
    endpoint->set_on_message(
        [this](const std::string& f) { frames.push_back(f); });
    endpoint->set_on_disconnect([this] { disconnected = true; });
    endpoint->start();
  }

  void subscribe(const std::string& id, const std::string& name) {
    endpoint->send(encode(subscription_request{id, name}));
  }
  std::vector<traffic_update> updates() const {
    std::vector<traffic_update> out;
    for (std::size_t k = 1; k < frames.size(); ++k) {
      out.push_back(decode_update(frames[k]));
    }
    return out;
  }
};

}  // namespace

TEST_CASE("registry accepts unique ids and rejects duplicates") {
  registry r(20.0);
  CHECK(r.handle_subscribe({"v1", "car one"}, 0).accepted);
  CHECK(r.subscriber_count() == 1);
  const subscription_ack dup = r.handle_subscribe({"v1", "car clone"}, 5);
  CHECK_FALSE(dup.accepted);
  CHECK(dup.reason.find("v1") != std::string::npos);
  CHECK(r.subscriber_count() == 1);

  r.handle_disconnect("v1");
  CHECK(r.subscriber_count() == 0);
  CHECK(r.handle_subscribe({"v1", "car one"}, 10).accepted);
}

TEST_CASE("registry applies the late-predecessor rule per node") {
  registry r(20.0);
  r.handle_subscribe({"v1", "a"}, 0);
  CHECK(r.handle_status("v1", status_of("v1", 3, 0), 0) ==
        status_result::applied);
  CHECK(r.handle_status("v1", status_of("v1", 3, 10), 10) ==
        status_result::discarded);
  CHECK(r.handle_status("v1", status_of("v1", 2, 20), 20) ==
        status_result::discarded);
  CHECK(r.handle_status("v1", status_of("v1", 7, 30), 30) ==
        status_result::applied);
  CHECK(r.find("v1")->latest.local_sequence == 7);
}

TEST_CASE("status from an unsubscribed id is a protocol violation") {
  registry r(20.0);
  CHECK_THROWS_AS(r.handle_status("ghost", status_of("ghost", 0, 0), 0),
                  protocol_violation);
}

TEST_CASE("updates carry reporting nodes under their subscription id") {
  registry r(20.0);
  r.handle_subscribe({"v1", "a"}, 0);
  r.handle_subscribe({"v2", "b"}, 0);
  // v2's payload claims a different name; the subscription id wins.
  status_message rogue = status_of("impostor", 0, 5);
  r.handle_status("v2", rogue, 5);
  r.handle_status("v1", status_of("v1", 0, 5), 5);

  const traffic_update u = r.make_update(100);
  CHECK(u.connected_nodes == 2);
  CHECK(u.global_timestamp_ms == 100);
  REQUIRE(u.vehicles.size() == 2);
  CHECK(u.vehicles[0].vehicle_name == "v1");
  CHECK(u.vehicles[1].vehicle_name == "v2");
}

TEST_CASE("nodes that never reported are counted but not listed") {
  registry r(20.0);
  r.handle_subscribe({"v1", "a"}, 0);
  r.handle_subscribe({"quiet", "b"}, 0);
  r.handle_status("v1", status_of("v1", 0, 5), 5);
  const traffic_update u = r.make_update(50);
  CHECK(u.connected_nodes == 2);
  REQUIRE(u.vehicles.size() == 1);
  CHECK(u.vehicles[0].vehicle_name == "v1");
}

TEST_CASE("monitors are counted as connected but excluded from vehicles") {
  registry r(20.0);
  r.handle_subscribe({"v1", "a"}, 0);
  r.handle_subscribe({"watcher", "dashboard"}, 0);
  status_message mon = status_of("watcher", 0, 5);
  mon.type = vehicle_type::monitor;
  r.handle_status("watcher", mon, 5);
  r.handle_status("v1", status_of("v1", 0, 5), 5);

  const traffic_update u = r.make_update(50);
  CHECK(u.connected_nodes == 2);
  REQUIRE(u.vehicles.size() == 1);
  CHECK(u.vehicles[0].vehicle_name == "v1");
}

TEST_CASE("global sequence advances once per assembled update") {
  registry r(20.0);
  r.handle_subscribe({"v1", "a"}, 0);
  r.handle_status("v1", status_of("v1", 0, 0), 0);
  CHECK(r.make_update(0).global_sequence == 0);
  CHECK(r.make_update(50).global_sequence == 1);
  CHECK(r.make_update(100).global_sequence == 2);
}

TEST_CASE("stale flags silent nodes and clears on resumption") {
  registry r(20.0);
  r.handle_subscribe({"v1", "a"}, 0);
  r.handle_status("v1", status_of("v1", 0, 0), 0);

  CHECK(r.stale_check(400, 500).empty());
  const auto flagged = r.stale_check(501, 500);
  REQUIRE(flagged == std::vector<std::string>{"v1"});
  CHECK(r.make_update(510).vehicles[0].connection_status ==
        link_status::inactive);

  r.handle_status("v1", status_of("v1", 1, 520), 520);
  CHECK(r.stale_check(600, 500).empty());
  CHECK(r.make_update(610).vehicles[0].connection_status ==
        link_status::active);
}

TEST_CASE("side info is carried until cleared") {
  registry r(20.0);
  r.handle_subscribe({"v1", "a"}, 0);
  r.handle_status("v1", status_of("v1", 0, 0), 0);
  r.set_control_side_info("priority_vehicle", "v1");
  CHECK(r.make_update(0).control_side_info.at("priority_vehicle") == "v1");
  r.clear_control_side_info("priority_vehicle");
  CHECK(r.make_update(50).control_side_info.empty());
}

TEST_CASE("service broadcasts on the rate grid to every subscriber") {
  virtual_clock clock;
  virtual_scheduler sched(clock);
  event_log log;
  manager_service service({20.0, 500}, sched, log);
  service.start();

  latency_model zero;
  auto [c1, s1] = simulated_link(zero, clock);
  auto [c2, s2] = simulated_link(zero, clock);
  service.attach_session(s1);
  service.attach_session(s2);
  scripted_client one(c1), two(c2);

  // One second with nobody subscribed: silence.
  clock.run_until(1'000'000);
  CHECK(service.broadcast_times_ms().empty());
  CHECK(one.frames.empty());

  one.subscribe("v1", "car one");
  two.subscribe("v2", "car two");
  clock.run_until(1'050'000);  // past the next grid edge
  one.endpoint->send(encode(status_of("v1", 0, clock.now_us() / 1000)));
  two.endpoint->send(encode(status_of("v2", 0, clock.now_us() / 1000)));
  clock.run_until(2'000'000);

  // Acks arrived first.
  REQUIRE(one.frames.size() >= 2);
  CHECK(decode_ack(one.frames[0]).accepted);
  CHECK(decode_ack(two.frames[0]).accepted);

  // Broadcasts sit on the 50 ms grid and only after subscription.
  const auto times = service.broadcast_times_ms();
  REQUIRE(!times.empty());
  for (double t : times) {
    CHECK(static_cast<std::int64_t>(t) % 50 == 0);
    CHECK(t >= 1000.0);
  }

  // The first broadcast since subscribing carries global_sequence 0:
  // suppressed ticks never consumed a sequence number.
  CHECK(one.updates().front().global_sequence == 0);

  // Identical payload for every subscriber from the moment both were in.
  const auto u1 = one.updates();
  const auto u2 = two.updates();
  REQUIRE(u1.size() == u2.size());
  for (std::size_t k = 0; k < u1.size(); ++k) {
    CHECK(one.frames[k + 1] == two.frames[k + 1]);
  }

  service.stop();
}

TEST_CASE("service rejects a duplicate id and closes that session") {
  virtual_clock clock;
  virtual_scheduler sched(clock);
  event_log log;
  manager_service service({20.0, 500}, sched, log);
  service.start();

  latency_model zero;
  auto [c1, s1] = simulated_link(zero, clock);
  auto [c2, s2] = simulated_link(zero, clock);
  service.attach_session(s1);
  service.attach_session(s2);
  scripted_client original(c1), clone(c2);

  original.subscribe("v1", "first");
  clock.run_until(10'000);
  clone.subscribe("v1", "second");
  clock.run_until(20'000);

  CHECK(decode_ack(original.frames.at(0)).accepted);
  const subscription_ack rejected = decode_ack(clone.frames.at(0));
  CHECK_FALSE(rejected.accepted);
  CHECK(rejected.reason.find("v1") != std::string::npos);
  CHECK(clone.disconnected);
  CHECK_FALSE(original.disconnected);
  CHECK(service.subscriber_count() == 1);

  service.stop();
}

TEST_CASE("service logs a stale transition once per episode") {
  virtual_clock clock;
  virtual_scheduler sched(clock);
  event_log log;
  manager_service service({20.0, 200}, sched, log);
  service.start();

  latency_model zero;
  auto [c1, s1] = simulated_link(zero, clock);
  service.attach_session(s1);
  scripted_client client(c1);
  client.subscribe("v1", "car");
  clock.run_until(1000);
  client.endpoint->send(encode(status_of("v1", 0, 1)));

  clock.run_until(2'000'000);  // silent for ~2 s with a 200 ms timeout

  std::size_t stale_lines = 0;
  for (const auto& line : log.lines()) {
    if (event_log::field(line, "event") == "stale") ++stale_lines;
  }
  CHECK(stale_lines == 1);

  // Resume, then go silent again: a second episode logs a second line.
  client.endpoint->send(encode(status_of("v1", 1, 2'000'000)));
  clock.run_until(2'100'000);
  clock.run_until(4'000'000);
  stale_lines = 0;
  for (const auto& line : log.lines()) {
    if (event_log::field(line, "event") == "stale") ++stale_lines;
  }
  CHECK(stale_lines == 2);

  service.stop();
}

TEST_CASE("a malformed status frame is logged and the session survives") {
  virtual_clock clock;
  virtual_scheduler sched(clock);
  event_log log;
  manager_service service({20.0, 500}, sched, log);
  service.start();

  latency_model zero;
  auto [c1, s1] = simulated_link(zero, clock);
  service.attach_session(s1);
  scripted_client client(c1);
  client.subscribe("v1", "car");
  clock.run_until(10'000);
  client.endpoint->send("this is not json");
  clock.run_until(20'000);

  // One bad frame must not tear down an otherwise healthy subscriber.
  CHECK_FALSE(client.disconnected);
  CHECK(service.subscriber_count() == 1);
  bool logged = false;
  for (const auto& line : log.lines()) {
    if (event_log::field(line, "event") == "bad_status" &&
        event_log::field(line, "id") == "v1") {
      logged = true;
    }
  }
  CHECK(logged);

  // The session still accepts well-formed statuses afterwards: the next
  // broadcast lists v1, which silent-or-garbage frames alone never achieve.
  client.endpoint->send(encode(status_of("v1", 0, 20'000)));
  clock.run_until(100'000);
  const auto updates = client.updates();
  REQUIRE(!updates.empty());
  REQUIRE(updates.back().vehicles.size() == 1);
  CHECK(updates.back().vehicles[0].vehicle_name == "v1");

  service.stop();
}
