#include "noisyrank/random.hpp"

#include <cmath>
#include <numbers>

namespace noisyrank {

namespace {

double box_muller(double u1, double u2) {
  // u1 in (0, 1] keeps the log finite.
  return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

double hash_normal(std::uint64_t key) noexcept {
  const std::uint64_t a = mix64(key);
  const std::uint64_t b = mix64(a ^ 0xd1b54a32d192ed03ULL);
  return box_muller(bits_to_unit(a), bits_to_unit(b));
}

double Rng::normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  return box_muller(u1, u2);
}

std::size_t Rng::below(std::size_t n) {
  if (n <= 1) return 0;
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return static_cast<std::size_t>(x % bound);
}

}  // namespace noisyrank
