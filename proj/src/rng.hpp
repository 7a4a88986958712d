#pragma once

#include <cstdint>
#include <random>

namespace pricelab {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// All randomness flows through explicitly seeded streams. The draw functions
// avoid std::*_distribution, whose output is implementation-defined; mt19937_64
// itself is fully specified, so sequences agree across compilers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return gen_(); }

  // [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n)
  long uniform_int(long n) {
    long v = static_cast<long>(uniform() * static_cast<double>(n));
    return v >= n ? n - 1 : v;
  }

 private:
  std::mt19937_64 gen_;
};

// Independent child stream: changing one stream id leaves all others untouched.
inline Rng derive_stream(std::uint64_t root_seed, std::uint64_t stream_id) {
  return Rng(splitmix64(root_seed) ^ splitmix64(0x5851f42d4c957f2dULL + stream_id));
}

}  // namespace pricelab
