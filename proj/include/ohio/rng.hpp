#pragma once

#include <cstdint>
#include <random>

namespace ohio {

/// Seeded random stream backed by std::mt19937_64, whose output sequence is
/// fixed by the standard. All distributions are implemented here instead of
/// using <random> distributions, which differ between standard libraries.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  // Child stream for parallel consumers: seed XOR a mixed stream id.
  SeededRng derive(std::uint64_t stream_id) const;

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer on [0, n).
  std::uint64_t uniform_index(std::uint64_t n);
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  double gamma(double shape);
  std::int64_t poisson(double rate);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace ohio
