#pragma once

#include <string>
#include <vector>

namespace crossway {

// Fractional exponent of the control nonlinearity; must lie strictly inside
// (0, 1) for finite-time convergence.
struct controller_params {
  double alpha = 0.5;
};

void validate(const controller_params& params);

enum class spacing_mode {
  // Desired gap tracks the follower's current speed: r + h*v_i. Matches the
  // deployed behavior; time-varying gaps break the exact antisymmetry the
  // convergence certificate relies on.
  headway_literal,
  // Desired gap uses a frozen reference speed: r + h*v_ref. Exact
  // antisymmetry, so the Lyapunov diagnostic is valid in this mode.
  constant_gap,
};

struct spacing_policy {
  double standstill_gap_m = 10.0;  // > 0
  double headway_s = 0.0;          // >= 0
  spacing_mode mode = spacing_mode::headway_literal;
  // Frozen speed for constant_gap mode; ignored in headway_literal mode.
  double reference_speed_mps = 0.0;
};

void validate(const spacing_policy& policy);

// One vehicle's longitudinal state along its own trajectory. progress is
// signed: negative while approaching the trajectory midpoint.
struct vehicle_state {
  double progress_m = 0.0;
  double speed_mps = 0.0;
  double input_mps2 = 0.0;  // last applied acceleration
};

// What vehicle i knows about one neighbor j: j's state plus the desired
// signed gap p*_ij. vehicle_id fixes the summation order so runs are
// bit-reproducible regardless of how the view was assembled.
struct neighbor_sample {
  std::string vehicle_id;
  double progress_m = 0.0;
  double speed_mps = 0.0;
  double desired_gap_m = 0.0;
};

using neighbor_view = std::vector<neighbor_sample>;

// sign(x) * |x|^alpha. Odd in x; sig(0) = 0.
double sig(double x, double alpha);

// Desired signed gap between platoon members `rank_offset` ranks apart
// (rank_offset = n_j - n_i, never 0). Antisymmetric in rank_offset.
// headway_literal uses the follower's current speed, constant_gap the
// policy's frozen reference speed.
double desired_gap(const spacing_policy& policy, double follower_speed_mps,
                   int rank_offset);

// Distributed control law: sums, over the neighbor view,
//   -sig(p_i - p_j - p*_ij)^(2a/(1+a)) - sig(v_i - v_j)^a.
// Contributions are added in ascending vehicle_id order.
double control_input(const vehicle_state& self, const neighbor_view& neighbors,
                     const controller_params& params);

// One (e_ij, a_ij) entry of the formation error enumeration. The enumeration
// covers *ordered* pairs, i.e. each communicating pair appears twice, once
// per direction, with opposite error signs.
struct pair_error {
  double error_m = 0.0;
  double weight = 0.0;  // adjacency entry, 0 or 1
};

// Energy-like diagnostic for the formation: per communicating pair the
// integral of the position nonlinearity, plus kinetic energy of the speeds
// as given. Valid only in constant_gap mode (time-varying desired gaps make
// the integral's lower bound move). Callers that want the diagnostic to
// vanish at consensus pass speeds relative to the fleet average.
double lyapunov_value(const std::vector<pair_error>& ordered_pair_errors,
                      const std::vector<double>& speeds_mps,
                      const controller_params& params, spacing_mode mode);

// Finite-time convergence bound: T = 2 / (c*(1-alpha)) * V0^((1-alpha)/2).
double settling_time_bound(double v0, double c,
                           const controller_params& params);

struct lyapunov_sample {
  double time_s = 0.0;
  double value = 0.0;  // > 0 on the convergent window
};

// Empirical decay-rate certificate: the smallest observed
// (-dV/dt) / V^((1+alpha)/2) across consecutive samples, clamped at 0.
// A positive result certifies the differential inequality on the window.
double estimate_c(const std::vector<lyapunov_sample>& v_series,
                  const controller_params& params);

}  // namespace crossway
