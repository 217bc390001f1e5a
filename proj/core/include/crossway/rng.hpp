#pragma once

#include <cstdint>
#include <random>

namespace crossway {

// Deterministic random source. mt19937_64 output is fixed by the standard;
// the normal transform is hand-rolled Box-Muller because
// std::normal_distribution is not bit-stable across standard libraries and
// simulated runs must be reproducible to the bit.
class det_rng {
 public:
  explicit det_rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double normal(double mean, double std);

  // exp(normal(mu, sigma)): mu/sigma live in log space.
  double lognormal(double mu, double sigma);

 private:
  std::mt19937_64 gen_;
};

// Stable 64-bit mix for deriving independent stream seeds from a base seed.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace crossway
