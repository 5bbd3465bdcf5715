#include "sphds/rng.hpp"

namespace sphds {

std::uint64_t mix64(std::uint64_t v) {
  v += 0x9e3779b97f4a7c15ULL;
  v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ULL;
  v = (v ^ (v >> 27)) * 0x94d049bb133111ebULL;
  return v ^ (v >> 31);
}

RandomStream RandomStream::from_seed(std::uint64_t seed) {
  return RandomStream(mix64(seed));
}

RandomStream RandomStream::for_trial(std::uint64_t master_seed, std::uint64_t trial_index) {
  return RandomStream(mix64(mix64(master_seed) ^ (trial_index * 0xd1342543de82ef95ULL + 1)));
}

std::uint64_t RandomStream::next_u64() {
  return mix64(key_ ^ (counter_++ * 0x9e3779b97f4a7c15ULL));
}

double RandomStream::next_uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::next_uniform(double lo, double hi) {
  return lo + (hi - lo) * next_uniform();
}

}  // namespace sphds
