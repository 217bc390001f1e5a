#include "crossway/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "crossway/errors.hpp"

namespace crossway {

namespace {

bool finite(double x) { return std::isfinite(x); }

void require_finite_state(const vehicle_state& s, const char* who) {
  if (!finite(s.progress_m) || !finite(s.speed_mps) || !finite(s.input_mps2)) {
    throw domain_error(std::string(who) + " state has a non-finite field");
  }
}

}  // namespace

void validate(const controller_params& params) {
  if (!finite(params.alpha) || params.alpha <= 0.0 || params.alpha >= 1.0) {
    throw domain_error("alpha must lie strictly inside (0, 1)");
  }
}

void validate(const spacing_policy& policy) {
  if (!finite(policy.standstill_gap_m) || policy.standstill_gap_m <= 0.0) {
    throw domain_error("standstill_gap_m must be > 0");
  }
  if (!finite(policy.headway_s) || policy.headway_s < 0.0) {
    throw domain_error("headway_s must be >= 0");
  }
  if (!finite(policy.reference_speed_mps)) {
    throw domain_error("reference_speed_mps must be finite");
  }
}

double sig(double x, double alpha) {
  if (!finite(x)) throw domain_error("sig: x must be finite");
  if (!finite(alpha) || alpha <= 0.0) {
    throw domain_error("sig: alpha must be > 0");
  }
  if (x == 0.0) return 0.0;
  return std::copysign(std::pow(std::fabs(x), alpha), x);
}

double desired_gap(const spacing_policy& policy, double follower_speed_mps,
                   int rank_offset) {
  validate(policy);
  if (rank_offset == 0) {
    throw domain_error("desired_gap: rank_offset must be nonzero");
  }
  if (!finite(follower_speed_mps)) {
    throw domain_error("desired_gap: follower speed must be finite");
  }
  const double speed = policy.mode == spacing_mode::constant_gap
                           ? policy.reference_speed_mps
                           : follower_speed_mps;
  return rank_offset * (policy.standstill_gap_m + policy.headway_s * speed);
}

double control_input(const vehicle_state& self, const neighbor_view& neighbors,
                     const controller_params& params) {
  validate(params);
  if (neighbors.empty()) {
    throw configuration_error("control_input: empty neighbor view");
  }
  require_finite_state(self, "self");

  neighbor_view ordered = neighbors;
  std::sort(ordered.begin(), ordered.end(),
            [](const neighbor_sample& a, const neighbor_sample& b) {
              return a.vehicle_id < b.vehicle_id;
            });

  const double beta = 2.0 * params.alpha / (1.0 + params.alpha);
  double u = 0.0;
  for (const auto& nb : ordered) {
    if (!finite(nb.progress_m) || !finite(nb.speed_mps) ||
        !finite(nb.desired_gap_m)) {
      throw domain_error("control_input: neighbor " + nb.vehicle_id +
                         " has a non-finite field");
    }
    const double e = self.progress_m - nb.progress_m - nb.desired_gap_m;
    u -= sig(e, beta);
    u -= sig(self.speed_mps - nb.speed_mps, params.alpha);
  }
  return u;
}

double lyapunov_value(const std::vector<pair_error>& ordered_pair_errors,
                      const std::vector<double>& speeds_mps,
                      const controller_params& params, spacing_mode mode) {
  validate(params);
  if (mode != spacing_mode::constant_gap) {
    throw diagnostic_invalid_error(
        "lyapunov_value requires constant_gap spacing; the diagnostic is "
        "undefined with speed-dependent desired gaps");
  }
  const double beta = 2.0 * params.alpha / (1.0 + params.alpha);
  // Closed form of the defining integral per pair:
  //   int_0^e sig(s)^beta ds = |e|^(1+beta) / (1+beta).
  // The enumeration lists ordered pairs, so each communicating pair
  // contributes twice; halving restores one contribution per pair, which is
  // the form whose decay matches the velocity dissipation.
  double position_sum = 0.0;
  for (const auto& pe : ordered_pair_errors) {
    if (!finite(pe.error_m) || !finite(pe.weight)) {
      throw domain_error("lyapunov_value: non-finite pair entry");
    }
    position_sum += pe.weight *
                    std::pow(std::fabs(pe.error_m), 1.0 + beta) / (1.0 + beta);
  }
  double speed_sum = 0.0;
  for (double v : speeds_mps) {
    if (!finite(v)) throw domain_error("lyapunov_value: non-finite speed");
    speed_sum += 0.5 * v * v;
  }
  return 0.5 * position_sum + speed_sum;
}

double settling_time_bound(double v0, double c,
                           const controller_params& params) {
  validate(params);
  if (!finite(c) || c <= 0.0) {
    throw domain_error("settling_time_bound: c must be > 0");
  }
  if (!finite(v0) || v0 < 0.0) {
    throw domain_error("settling_time_bound: V0 must be >= 0");
  }
  return 2.0 / (c * (1.0 - params.alpha)) *
         std::pow(v0, (1.0 - params.alpha) / 2.0);
}

double estimate_c(const std::vector<lyapunov_sample>& v_series,
                  const controller_params& params) {
  validate(params);
  if (v_series.size() < 2) {
    throw insufficient_data_error(
        "estimate_c: need at least 2 samples of V(t)");
  }
  const double exponent = (1.0 + params.alpha) / 2.0;
  double c_hat = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < v_series.size(); ++k) {
    const auto& a = v_series[k];
    const auto& b = v_series[k + 1];
    if (!finite(a.value) || a.value <= 0.0) {
      throw domain_error("estimate_c: V samples must be strictly positive");
    }
    const double dt = b.time_s - a.time_s;
    if (!finite(dt) || dt <= 0.0) {
      throw domain_error("estimate_c: sample times must be increasing");
    }
    const double decay = -(b.value - a.value) / dt;
    c_hat = std::min(c_hat, decay / std::pow(a.value, exponent));
  }
  if (v_series.back().value <= 0.0) {
    throw domain_error("estimate_c: V samples must be strictly positive");
  }
  return std::max(0.0, c_hat);
}

}  // namespace crossway
