#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace cppf {

/// Seeded random source with platform-independent derived draws.
///
/// The standard distributions are implementation-defined, so bounded
/// integers, uniform reals and normals are derived here directly from the
/// 64-bit Mersenne Twister stream. Every golden value in the test suite
/// depends on this.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform integer in [0, bound). bound must be > 0.
  std::size_t uniform_index(std::size_t bound);

  // Uniform real in [0, 1) with 53 bits of precision.
  double uniform_real();

  double normal(double mean = 0.0, double stddev = 1.0);

  bool bernoulli(double p) { return uniform_real() < p; }

  // Independent child stream; advances this generator by one draw.
  Rng fork() { return Rng(next_u64()); }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

  // `count` distinct indices from [0, n), in draw order.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace cppf
