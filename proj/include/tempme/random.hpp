#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace tempme {

// SplitMix64 engine. Cheap to construct, so every trajectory / query can own
// an independent stream keyed by its coordinates.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

// Mixes a seed with a list of coordinates into a new stream seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = seed ^ 0x6a09e667f3bcc909ULL;
  for (auto k : keys) {
    SplitMix64 mix(h ^ (k + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
    h = mix();
  }
  return h;
}

// Uniform index in [0, n). n must be > 0. Rejection sampling keeps it unbiased
// and independent of the standard library's distribution implementation.
template <class Engine>
std::uint64_t uniform_index(Engine& eng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t r;
  do {
    r = eng();
  } while (r >= limit);
  return r % n;
}

// Uniform double in the open interval (0, 1).
template <class Engine>
double uniform_open01(Engine& eng) {
  return (static_cast<double>(eng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace tempme
