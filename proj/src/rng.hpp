#pragma once

#include <cstdint>
#include <random>

namespace flex::detail {

/// Seedable portable generator: mt19937_64 with an explicit 53-bit mantissa
/// mapping, so streams are identical across platforms and standard-library
/// implementations (std::uniform_real_distribution is not portable).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform01() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  private:
    std::mt19937_64 eng_;
};

}  // namespace flex::detail
