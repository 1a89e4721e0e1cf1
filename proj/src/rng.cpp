#include "cppf/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace cppf {

std::size_t Rng::uniform_index(std::size_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform_index: bound must be positive");
  const std::uint64_t b = bound;
  // Reject the tail so every residue is equally likely.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % b;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % b);
}

double Rng::uniform_real() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal(double mean, double stddev) {
  if (has_spare_) {
    has_spare_ = false;
    return mean + stddev * spare_;
  }
  double u1;
  do {
    u1 = uniform_real();
  } while (u1 <= 0.0);
  const double u2 = uniform_real();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return mean + stddev * r * std::cos(theta);
}

std::vector<std::size_t> Rng::sample_indices(std::size_t n, std::size_t count) {
  if (count > n) throw std::invalid_argument("sample_indices: count exceeds population");
  // Partial Fisher-Yates over an index pool.
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  std::vector<std::size_t> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    std::size_t j = k + uniform_index(n - k);
    std::swap(pool[k], pool[j]);
    out.push_back(pool[k]);
  }
  return out;
}

}  // namespace cppf
