#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace specrecov {

// Deterministic RNG wrapper. All distributions are implemented here rather
// than with std:: distribution objects, whose output is implementation
// defined; this keeps episode replays bit-identical across platforms.
class Rng {
public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Zero-mean uniform noise with half-width `mag`.
  double sym_uniform(double mag) { return uniform(-mag, mag); }

  std::uint64_t uniform_index(std::uint64_t n) {
    // Rejection-free modulo is fine here; n is always tiny compared to 2^64.
    return engine_() % n;
  }

  double gaussian(double mean = 0.0, double stddev = 1.0) {
    if (has_spare_) {
      has_spare_ = false;
      return mean + stddev * spare_;
    }
    double u1 = uniform01();
    double u2 = uniform01();
    while (u1 <= 1e-300) u1 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return mean + stddev * r * std::cos(a);
  }

  // Derive an independent stream, e.g. one per episode.
  Rng fork(std::uint64_t salt) {
    return Rng(next_u64() ^ (salt * 0x9e3779b97f4a7c15ULL));
  }

private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace specrecov
