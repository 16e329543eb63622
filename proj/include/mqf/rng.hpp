#pragma once

#include <cstdint>
#include <random>

namespace mqf {

/// Pseudo-random stream with draw accounting.
///
/// Uniform and normal variates are derived from the raw 64-bit engine output
/// by fixed formulas, so sequences are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() {
    ++draws_;
    return engine_();
  }
  /// Uniform on [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  /// Uniform on [lo, hi); returns lo exactly when lo == hi.
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
  /// Box-Muller without caching: two raw draws per variate.
  double normal(double mean, double stddev);
  /// Uniform index in [0, n).
  std::size_t index(std::size_t n);
  bool bernoulli(double p) { return unit() < p; }

  /// Number of raw 64-bit draws consumed so far.
  std::uint64_t draws() const noexcept { return draws_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t draws_ = 0;
};

/// Counter-based seed derivation: stream `stream` of master seed `master`.
std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream);

/// Independent sub-streams of one run, each seeded by `split_seed(master, id)`
/// with ids in declaration order (env = 0 ... eval = 5).
struct RngStreams {
  Rng env;
  Rng action_sampling;
  Rng exploration;
  Rng buffer;
  Rng init;
  Rng eval;
};

RngStreams seed_everything(std::uint64_t seed);

}  // namespace mqf
