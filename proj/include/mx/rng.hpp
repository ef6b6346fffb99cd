// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mx {

// Deterministic random stream. std::mt19937 is fully specified by the
// standard; the distribution transforms live here because the std::*
// distribution classes are implementation-defined and would break
// reproducibility across standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed)
      : gen_(static_cast<uint32_t>(seed) ^ static_cast<uint32_t>(seed >> 32)) {}

  uint32_t next_u32() { return gen_(); }

  // [0, 1) with 53 random bits.
  double uniform() {
    uint64_t hi = gen_() >> 5;  // 27 bits
    uint64_t lo = gen_() >> 6;  // 26 bits
    return static_cast<double>(hi * 67108864.0 + lo) * 0x1p-53;
  }

  // Standard normal via Box-Muller, pair-cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  float normal_f() { return static_cast<float>(normal()); }

  float uniform_f(float lo, float hi) {
    return lo + static_cast<float>(uniform()) * (hi - lo);
  }

 private:
  std::mt19937 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mx
