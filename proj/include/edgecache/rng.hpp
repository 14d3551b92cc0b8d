#pragma once

#include <cmath>
#include <cstdint>

namespace edgecache {

// SplitMix64: bijective 64-bit mixer, used to derive independent stream seeds
// from (seed, stream, counter) tuples.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix3(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return splitmix64(splitmix64(splitmix64(a) ^ b) ^ c);
}

// PCG32 (O'Neill). Small, fast, reproducible across platforms.
class Pcg32 {
 public:
  explicit Pcg32(std::uint64_t seed = 0x853c49e6748fea9bULL,
                 std::uint64_t seq = 0xda3e39cb94b95bdbULL) {
    state_ = 0;
    inc_ = (seq << 1) | 1u;
    next();
    state_ += seed;
    next();
  }

  std::uint32_t next() {
    std::uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    std::uint32_t xorshifted =
        static_cast<std::uint32_t>(((old >> 18) ^ old) >> 27);
    std::uint32_t rot = static_cast<std::uint32_t>(old >> 59);
    return (xorshifted >> rot) | (xorshifted << ((32 - rot) & 31));
  }

  // Uniform double in [0, 1) with 53-bit resolution.
  double uniform() {
    std::uint64_t hi = next();
    std::uint64_t lo = next();
    return static_cast<double>(((hi << 32) | lo) >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Exponential with unit mean (Rayleigh fading power).
  double exponential() {
    double u = uniform();
    return -std::log1p(-u);
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Lemire rejection-free-ish bounded draw; bias < 2^-32 is irrelevant here
    // but we reject to keep draws exact.
    std::uint64_t x = next();
    std::uint64_t m = x * n;
    std::uint64_t l = m & 0xffffffffULL;
    if (l < n) {
      std::uint64_t t = (0x100000000ULL - n) % n;
      while (l < t) {
        x = next();
        m = x * n;
        l = m & 0xffffffffULL;
      }
    }
    return m >> 32;
  }

 private:
  std::uint64_t state_;
  std::uint64_t inc_;
};

// Counter-based stream factory: rng_for(seed, stream, counter) yields a
// generator whose draws depend only on the key, never on worker scheduling.
// Parallel and serial runs over the same counters therefore agree bit-exactly.
inline Pcg32 rng_for(std::uint64_t seed, std::uint64_t stream,
                     std::uint64_t counter) {
  return Pcg32(mix3(seed, stream, counter), splitmix64(stream ^ counter));
}

}  // namespace edgecache
