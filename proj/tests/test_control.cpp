#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "crossway/control.hpp"
#include "crossway/errors.hpp"

using namespace crossway;

namespace {

// Independent straight-line re-evaluation of the control law, kept dumb on
// purpose: no sorting, no shared helpers beyond std::pow.
double control_oracle(const vehicle_state& self, const neighbor_view& view,
                      double alpha) {
  const double beta = 2.0 * alpha / (1.0 + alpha);
  auto s = [](double x, double a) {
    if (x == 0.0) return 0.0;
    return (x > 0 ? 1.0 : -1.0) * std::pow(std::fabs(x), a);
  };
  double u = 0.0;
  for (const auto& nb : view) {
    u -= s(self.progress_m - nb.progress_m - nb.desired_gap_m, beta);
    u -= s(self.speed_mps - nb.speed_mps, alpha);
  }
  return u;
}

// Composite Simpson integral of sig(s, a) over [0, e]; sign handled by the
// oddness of the integrand.
double simpson_sig_integral(double e, double a) {
  const int n = 1 << 20;  // fine grid: the integrand kinks at 0
  const double h = e / n;
  double acc = sig(0.0, a) + sig(e, a);
  for (int k = 1; k < n; ++k) {
    acc += (k % 2 == 1 ? 4.0 : 2.0) * sig(k * h, a);
  }
  return acc * h / 3.0;
}

}  // namespace

TEST_CASE("sig is exactly odd and vanishes at zero") {
  for (double alpha : {0.1, 0.3, 0.5, 0.9}) {
    CHECK(sig(0.0, alpha) == 0.0);
    for (double x : {1e-8, 0.25, 0.5, 1.0, 2.0, 17.5, 1e6}) {
      CHECK(sig(-x, alpha) == -sig(x, alpha));
      CHECK(sig(x, alpha) > 0.0);
    }
  }
}

TEST_CASE("sig derivative matches a central finite difference") {
  // d/dx sig(x, a) = a * |x|^(a-1) away from zero.
  const double h = 1e-6;
  for (double alpha : {0.3, 0.5, 0.9}) {
    for (double x : {-2.0, -1.0, -0.5, 0.5, 1.0, 2.0}) {
      const double numeric = (sig(x + h, alpha) - sig(x - h, alpha)) / (2 * h);
      const double analytic = alpha * std::pow(std::fabs(x), alpha - 1.0);
      CHECK(numeric == doctest::Approx(analytic).epsilon(1e-6));
    }
  }
}

TEST_CASE("sig is strictly increasing") {
  for (double alpha : {0.1, 0.5, 0.9}) {
    double prev = sig(-3.0, alpha);
    for (double x = -2.9; x <= 3.0; x += 0.1) {
      const double cur = sig(x, alpha);
      CHECK(cur > prev);
      prev = cur;
    }
  }
}

TEST_CASE("sig rejects out-of-domain input") {
  CHECK_THROWS_AS(sig(std::nan(""), 0.5), domain_error);
  CHECK_THROWS_AS(sig(1.0, 0.0), domain_error);
  CHECK_THROWS_AS(sig(1.0, -0.5), domain_error);
}

TEST_CASE("desired gap is antisymmetric in the rank offset") {
  spacing_policy policy;
  policy.standstill_gap_m = 10.0;
  policy.headway_s = 0.8;
  for (int k : {1, 2, 3}) {
    for (double v : {0.0, 5.0, 9.7}) {
      CHECK(desired_gap(policy, v, k) == -desired_gap(policy, v, -k));
    }
  }
  CHECK_THROWS_AS(desired_gap(policy, 5.0, 0), domain_error);
}

TEST_CASE("desired gap scales linearly with rank distance") {
  spacing_policy policy;
  policy.standstill_gap_m = 10.0;
  policy.headway_s = 0.8;
  const double unit = 10.0 + 0.8 * 9.7;
  CHECK(desired_gap(policy, 9.7, 1) == doctest::Approx(unit));
  CHECK(desired_gap(policy, 9.7, 3) == doctest::Approx(3 * unit));
}

TEST_CASE("constant_gap mode freezes the gap at the reference speed") {
  spacing_policy policy;
  policy.mode = spacing_mode::constant_gap;
  policy.standstill_gap_m = 10.0;
  policy.headway_s = 0.8;
  policy.reference_speed_mps = 10.0;
  CHECK(desired_gap(policy, 0.0, 1) == desired_gap(policy, 25.0, 1));
  CHECK(desired_gap(policy, 3.0, 1) == doctest::Approx(18.0));
}

TEST_CASE("control law matches an independent evaluation on random states") {
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> pos(-50.0, 50.0);
  std::uniform_real_distribution<double> vel(-10.0, 10.0);
  std::uniform_real_distribution<double> gap(-30.0, 30.0);
  for (double alpha : {0.1, 0.5, 0.9}) {
    controller_params params{alpha};
    for (int trial = 0; trial < 200; ++trial) {
      vehicle_state self{pos(gen), vel(gen), 0.0};
      neighbor_view view;
      const int n = 1 + static_cast<int>(gen() % 4);
      for (int j = 0; j < n; ++j) {
        view.push_back({"v" + std::to_string(j), pos(gen), vel(gen),
                        gap(gen)});
      }
      const double got = control_input(self, view, params);
      const double want = control_oracle(self, view, alpha);
      CHECK(got == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("control input vanishes at the formation equilibrium") {
  controller_params params{0.4};
  vehicle_state self{0.0, 8.0, 0.0};
  neighbor_view view{{"a", -12.0, 8.0, 12.0}, {"b", 12.0, 8.0, -12.0}};
  CHECK(control_input(self, view, params) == 0.0);
}

TEST_CASE("pair forces are equal and opposite") {
  // Two vehicles with consistent (antisymmetric) desired gaps: whatever one
  // is commanded, the other is commanded the negative of.
  controller_params params{0.6};
  vehicle_state a{3.0, 7.0, 0.0};
  vehicle_state b{-9.5, 8.2, 0.0};
  const double gap_ab = 11.0;
  const double u_a = control_input(
      a, {{"b", b.progress_m, b.speed_mps, gap_ab}}, params);
  const double u_b = control_input(
      b, {{"a", a.progress_m, a.speed_mps, -gap_ab}}, params);
  CHECK(u_a == doctest::Approx(-u_b).epsilon(1e-12));
}

TEST_CASE("summation order does not change the result") {
  controller_params params{0.3};
  vehicle_state self{1.0, 2.0, 0.0};
  neighbor_view fwd{{"a", -7.0, 1.0, 5.0},
                    {"b", 3.0, 2.5, -4.0},
                    {"c", 11.0, 0.5, -15.0}};
  neighbor_view rev(fwd.rbegin(), fwd.rend());
  CHECK(control_input(self, fwd, params) == control_input(self, rev, params));
}

TEST_CASE("control input rejects broken views") {
  controller_params params{0.5};
  vehicle_state self{0.0, 0.0, 0.0};
  CHECK_THROWS_AS(control_input(self, {}, params), configuration_error);
  CHECK_THROWS_AS(
      control_input(self, {{"a", std::nan(""), 0.0, 0.0}}, params),
      domain_error);
  CHECK_THROWS_AS(control_input(self, {{"a", 0.0, 0.0, 0.0}},
                                controller_params{1.0}),
                  domain_error);
}

TEST_CASE("energy diagnostic matches numerical quadrature") {
  // The per-pair position term is the integral of the position nonlinearity
  // from 0 to the pair error; check the closed form against Simpson.
  for (double alpha : {0.1, 0.5, 0.9}) {
    controller_params params{alpha};
    const double beta = 2.0 * alpha / (1.0 + alpha);
    const std::vector<pair_error> pairs{{1.7, 1.0}, {-2.3, 1.0}, {0.4, 1.0},
                                        {5.0, 0.0}};
    const std::vector<double> speeds{1.25, -0.75, 0.5};
    const double got =
        lyapunov_value(pairs, speeds, params, spacing_mode::constant_gap);

    double want = 0.0;
    for (const auto& pe : pairs) {
      want += 0.5 * pe.weight *
              std::fabs(simpson_sig_integral(pe.error_m, beta));
    }
    for (double v : speeds) want += 0.5 * v * v;
    CHECK(got == doctest::Approx(want).epsilon(1e-6));
  }
}

TEST_CASE("energy diagnostic is zero exactly at consensus") {
  controller_params params{0.5};
  CHECK(lyapunov_value({{0.0, 1.0}, {0.0, 1.0}}, {0.0, 0.0}, params,
                       spacing_mode::constant_gap) == 0.0);
}

TEST_CASE("energy diagnostic refuses speed-dependent spacing") {
  controller_params params{0.5};
  CHECK_THROWS_AS(lyapunov_value({{1.0, 1.0}}, {0.0}, params,
                                 spacing_mode::headway_literal),
                  diagnostic_invalid_error);
}

TEST_CASE("settling bound evaluates the closed form") {
  controller_params params{0.5};
  // 2 / (c (1-alpha)) * V0^((1-alpha)/2) with c=2, alpha=0.5, V0=16.
  CHECK(settling_time_bound(16.0, 2.0, params) ==
        doctest::Approx(2.0 / (2.0 * 0.5) * std::pow(16.0, 0.25)));
  CHECK_THROWS_AS(settling_time_bound(1.0, 0.0, params), domain_error);
  CHECK_THROWS_AS(settling_time_bound(-1.0, 1.0, params), domain_error);
}

TEST_CASE("decay-rate estimate recovers the rate of an exact solution") {
  // V(t) solving dV/dt = -c V^((1+alpha)/2) has the closed form
  // V(t) = (V0^((1-alpha)/2) - c (1-alpha)/2 t)^(2/(1-alpha)).
  const double alpha = 0.5;
  const double c = 0.8;
  const double v0 = 9.0;
  controller_params params{alpha};
  std::vector<lyapunov_sample> series;
  const double t_zero =
      2.0 / (c * (1.0 - alpha)) * std::pow(v0, (1.0 - alpha) / 2.0);
  for (double t = 0.0; t < 0.9 * t_zero; t += 1e-4) {
    const double base = std::pow(v0, (1.0 - alpha) / 2.0) -
                        c * (1.0 - alpha) / 2.0 * t;
    series.push_back({t, std::pow(base, 2.0 / (1.0 - alpha))});
  }
  const double c_hat = estimate_c(series, params);
  CHECK(c_hat == doctest::Approx(c).epsilon(1e-3));
  CHECK(c_hat <= c);  // the estimate certifies, never flatters
}

TEST_CASE("decay-rate estimate clamps non-decaying series at zero") {
  controller_params params{0.5};
  CHECK(estimate_c({{0.0, 1.0}, {1.0, 2.0}}, params) == 0.0);
  CHECK_THROWS_AS(estimate_c({{0.0, 1.0}}, params), insufficient_data_error);
  CHECK_THROWS_AS(estimate_c({{0.0, 1.0}, {0.0, 0.5}}, params), domain_error);
  CHECK_THROWS_AS(estimate_c({{0.0, -1.0}, {1.0, 0.5}}, params), domain_error);
}
