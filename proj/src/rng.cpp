#include "mqf/rng.hpp"

#include <cmath>
#include <numbers>

namespace mqf {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

double Rng::normal(double mean, double stddev) {
  // 1 - unit() lies in (0, 1], keeping the logarithm finite.
  const double u1 = 1.0 - unit();
  const double u2 = unit();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * radius * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t Rng::index(std::size_t n) {
  const unsigned __int128 wide = static_cast<unsigned __int128>(next_u64()) * n;
  return static_cast<std::size_t>(wide >> 64);
}

std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(splitmix64(master) ^ splitmix64(0xA5A5A5A5ULL + stream));
}

RngStreams seed_everything(std::uint64_t seed) {
  return RngStreams{Rng(split_seed(seed, 0)), Rng(split_seed(seed, 1)), Rng(split_seed(seed, 2)),
                    Rng(split_seed(seed, 3)), Rng(split_seed(seed, 4)), Rng(split_seed(seed, 5))};
}

}  // namespace mqf
