#pragma once

#include <cstdint>

namespace sphds {

/// splitmix64 finalizer; the basis of every pseudo-random draw in the toolkit.
std::uint64_t mix64(std::uint64_t v);

/// Counter-based uniform stream. Each draw is a pure function of
/// (key, counter), so a trial can own a disjoint stream derived from
/// (master seed, trial index) and any prefix of its draws can be replayed
/// exactly. Draws are consumed in a documented order by the executor:
/// jump input first, then jump selection, then overlap decisions.
class RandomStream {
 public:
  RandomStream() = default;
  explicit RandomStream(std::uint64_t key) : key_(key) {}

  static RandomStream from_seed(std::uint64_t seed);
  static RandomStream for_trial(std::uint64_t master_seed, std::uint64_t trial_index);

  std::uint64_t next_u64();
  /// Uniform in [0, 1), 53 bits of mantissa.
  double next_uniform();
  double next_uniform(double lo, double hi);

  std::uint64_t key() const { return key_; }
  std::uint64_t draws_consumed() const { return counter_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace sphds
