#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace kartmpc {

// Deterministic normal deviates. std::normal_distribution is
// implementation-defined, so logs seeded on one platform would not replay on
// another; Box-Muller over the engine's raw output is portable.
class GaussianRng {
 public:
  explicit GaussianRng(std::uint64_t seed) : engine_(seed) {}

  double uniform() {
    // 53-bit mantissa in (0, 1]
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1p-53;
  }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace kartmpc
