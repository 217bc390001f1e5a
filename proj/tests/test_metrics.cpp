#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "crossway/errors.hpp"
#include "crossway/metrics.hpp"

using namespace crossway;

namespace {

// One-pass Welford reference, a different algorithm from the library's
// two-pass accumulation.
stats_summary stats_oracle(std::vector<double> xs) {
  stats_summary s;
  s.count = xs.size();
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  for (double x : xs) {
    ++n;
    const double d1 = x - mean;
    mean += d1 / static_cast<double>(n);
    m2 += d1 * (x - mean);
  }
  s.mean = mean;
  s.std = std::sqrt(m2 / static_cast<double>(xs.size() - 1));
  std::sort(xs.begin(), xs.end());
  const auto pct = [&xs](double q) {
    const double pos = q * static_cast<double>(xs.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (xs[hi] - xs[lo]) * (pos - lo);
  };
  s.p50 = pct(0.50);
  s.p95 = pct(0.95);
  s.max = xs.back();
  return s;
}

}  // namespace

TEST_CASE("stats match a two-pass recomputation on random samples") {
  std::mt19937_64 gen(99);
  std::lognormal_distribution<double> dist(3.0, 0.8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> xs(2 + gen() % 500);
    for (double& x : xs) x = dist(gen);
    const stats_summary got = stats(xs);
    const stats_summary want = stats_oracle(xs);
    CHECK(got.mean == doctest::Approx(want.mean).epsilon(1e-9));
    CHECK(got.std == doctest::Approx(want.std).epsilon(1e-9));
    CHECK(got.p50 == doctest::Approx(want.p50).epsilon(1e-9));
    CHECK(got.p95 == doctest::Approx(want.p95).epsilon(1e-9));
    CHECK(got.max == want.max);
    CHECK(got.count == want.count);
  }
}

TEST_CASE("stats on a known small sample") {
  const stats_summary s = stats({1.0, 2.0, 3.0, 4.0});
  CHECK(s.mean == doctest::Approx(2.5));
  CHECK(s.std == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(s.p50 == doctest::Approx(2.5));
  CHECK(s.max == 4.0);
  CHECK(s.count == 4);
}

TEST_CASE("stats need two samples") {
  CHECK_THROWS_AS(stats({}), insufficient_data_error);
  CHECK_THROWS_AS(stats({1.0}), insufficient_data_error);
  CHECK_NOTHROW(stats({1.0, 1.0}));
}

TEST_CASE("inter-arrival series differentiates sorted timestamps") {
  CHECK(ttp_series({}) == std::vector<double>{});
  CHECK(ttp_series({10.0}) == std::vector<double>{});
  CHECK(ttp_series({10.0, 15.0, 15.0, 30.0}) ==
        std::vector<double>{5.0, 0.0, 15.0});
  CHECK_THROWS_AS(ttp_series({10.0, 5.0}), validation_error);
}

TEST_CASE("sequence progression reports gaps and monotonicity") {
  SUBCASE("clean progression") {
    const sequence_report r =
        sequence_progression({{0.0, 0}, {1.0, 1}, {2.0, 2}});
    CHECK(r.monotone);
    CHECK(r.gap_total == 0);
    CHECK(r.gaps.empty());
  }

  SUBCASE("jumps count the skipped sequences") {
    const sequence_report r =
        sequence_progression({{0.0, 0}, {1.0, 3}, {2.0, 4}, {3.0, 10}});
    CHECK(r.monotone);
    CHECK(r.gap_total == 2 + 5);
    REQUIRE(r.gaps.size() == 2);
    CHECK(r.gaps[0].first == 1.0);
    CHECK(r.gaps[0].second == 2);
    CHECK(r.gaps[1].second == 5);
  }

  SUBCASE("regressions break monotonicity") {
    const sequence_report r = sequence_progression({{0.0, 5}, {1.0, 3}});
    CHECK_FALSE(r.monotone);
  }

  SUBCASE("empty input is trivially monotone") {
    CHECK(sequence_progression({}).monotone);
  }
}

TEST_CASE("settling detection finds the earliest held window") {
  std::vector<double> time_s;
  std::vector<double> err;
  for (int k = 0; k <= 1000; ++k) {
    const double t = 0.01 * k;
    time_s.push_back(t);
    err.push_back(1.0 * std::exp(-t));  // crosses 0.1 at t = ln(10)
  }
  const auto settle = detect_settling(time_s, {err}, 0.1, 2.0);
  REQUIRE(settle.has_value());
  CHECK(*settle == doctest::Approx(std::log(10.0)).epsilon(0.01));
}

TEST_CASE("settling requires the hold window to fit in the log") {
  const std::vector<double> time_s{0.0, 1.0, 2.0, 3.0};
  const std::vector<double> err{0.0, 0.0, 0.0, 0.0};
  CHECK(detect_settling(time_s, {err}, 0.1, 3.0) == 0.0);
  CHECK_FALSE(detect_settling(time_s, {err}, 0.1, 3.5).has_value());
}

TEST_CASE("an excursion inside the window postpones settling") {
  std::vector<double> time_s;
  std::vector<double> err;
  for (int k = 0; k <= 100; ++k) {
    const double t = 0.1 * k;
    time_s.push_back(t);
    err.push_back(t < 3.0 ? 1.0 : 0.0);
  }
  err[50] = 0.5;  // blip at t = 5: every window over [3, 5] is spoiled
  const auto settle = detect_settling(time_s, {err}, 0.1, 2.0);
  REQUIRE(settle.has_value());
  CHECK(*settle == doctest::Approx(5.1));
}

TEST_CASE("every series must be inside the band simultaneously") {
  std::vector<double> time_s;
  std::vector<double> a, b;
  for (int k = 0; k <= 100; ++k) {
    const double t = 0.1 * k;
    time_s.push_back(t);
    a.push_back(t < 3.0 ? 1.0 : 0.0);
    b.push_back(t < 6.0 ? 1.0 : 0.0);
  }
  const auto settle = detect_settling(time_s, {a, b}, 0.1, 2.0);
  REQUIRE(settle.has_value());
  CHECK(*settle == doctest::Approx(6.0));
}

TEST_CASE("settling is monotone in the threshold") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> noise(-0.02, 0.02);
  std::vector<double> time_s;
  std::vector<double> err;
  for (int k = 0; k <= 2000; ++k) {
    const double t = 0.01 * k;
    time_s.push_back(t);
    err.push_back(2.0 * std::exp(-0.8 * t) + noise(gen));
  }
  std::optional<double> prev;
  for (double threshold : {0.05, 0.1, 0.2, 0.5, 1.0}) {
    const auto settle = detect_settling(time_s, {err}, threshold, 1.0);
    REQUIRE(settle.has_value());
    if (prev) CHECK(*settle <= *prev);  // looser band settles no later
    prev = settle;
  }
}

TEST_CASE("settling input validation") {
  CHECK_THROWS_AS(detect_settling({0.0}, {{0.0}}, 0.0, 1.0), domain_error);
  CHECK_THROWS_AS(detect_settling({0.0}, {{0.0}}, 0.1, -1.0), domain_error);
  CHECK_THROWS_AS(detect_settling({0.0, 1.0}, {{0.0}}, 0.1, 1.0),
                  validation_error);
  CHECK_FALSE(detect_settling({}, {}, 0.1, 1.0).has_value());
}

TEST_CASE("delay kind names round-trip") {
  for (delay_kind k : {delay_kind::transport_rtt, delay_kind::ws_ack,
                       delay_kind::state_rtt, delay_kind::ttp}) {
    CHECK(delay_kind_from_string(to_string(k)) == k);
  }
  CHECK_FALSE(delay_kind_from_string("bogus").has_value());
}

TEST_CASE("report rendering includes every populated section") {
  run_report r;
  r.settling_time_s = 12.5;
  r.mutual_exclusion_ok = true;
  r.collision_classifications.emplace_back("v1->v2",
                                           collision_class::avoids);
  r.c_hat = 0.5;
  r.v0 = 100.0;
  r.settling_bound_s = 40.0;
  r.notes.emplace_back("vehicles", "3");
  const std::string text = format_report(r);
  CHECK(text.find("settling_time_s: 12.5") != std::string::npos);
  CHECK(text.find("mutual_exclusion_ok: yes") != std::string::npos);
  CHECK(text.find("collision v1->v2: avoids") != std::string::npos);
  CHECK(text.find("c_hat: 0.5") != std::string::npos);
  CHECK(text.find("vehicles: 3") != std::string::npos);
}
