#pragma once

#include <cstdint>
#include <random>

namespace tdist {

// Seedable 64-bit generator with the samplers the estimators need. The
// reproducibility contract is per-seed on one platform, not bit-exact floats
// across platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  // Independent substream for (seed, index); used so parallel Monte Carlo
  // trials are scheduling-order independent.
  static Rng stream(uint64_t seed, uint64_t index);

  uint64_t raw() { return gen_(); }

  // Uniform on (0, 1).
  double uniform() {
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller (second draw cached).
  double normal();

  // Gamma(shape, rate) by the Marsaglia-Tsang squeeze for shape >= 1 and
  // shape boosting below.
  double gamma(double shape, double rate);

 private:
  std::mt19937_64 gen_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

uint64_t mix64(uint64_t z);

}  // namespace tdist
