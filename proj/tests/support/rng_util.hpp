#pragma once

// Deterministic RNG for tests, same mantissa mapping as the library's.

#include <cstdint>
#include <random>

namespace testutil {

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  private:
    std::mt19937_64 eng_;
};

}  // namespace testutil
