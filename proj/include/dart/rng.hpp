#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace dart {

// Deterministic PRNG (splitmix64 core). std:: distributions are
// implementation-defined, so sampling is done by hand to keep runs
// reproducible across compilers.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed * 0x9E3779B97F4A7C15ULL + 1ULL) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). Rejection sampling, unbiased.
  int uniform_int(int n) {
    const uint64_t bound = uint64_t(n);
    const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    uint64_t r;
    do {
      r = next_u64();
    } while (r >= limit);
    return int(r % bound);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller with a cached spare.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    const double two_pi = 6.283185307179586476925286766559;
    spare_ = mag * std::sin(two_pi * u2);
    has_spare_ = true;
    return mag * std::cos(two_pi * u2);
  }

  float normal_f(float mean, float stddev) {
    return mean + stddev * float(normal());
  }

 private:
  uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

inline uint64_t fnv1a64(std::string_view s, uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// One run seed fans out into independent named streams so that toggling a
// feature (e.g. fluency) does not perturb unrelated draws (e.g. the episode
// split).
inline Rng derive_stream(uint64_t seed, std::string_view name) {
  uint64_t h = fnv1a64(name);
  h ^= seed + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
  return Rng(h);
}

inline Rng derive_stream(uint64_t seed, std::string_view name, uint64_t index) {
  uint64_t h = fnv1a64(name);
  h ^= seed + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
  h ^= (index + 1) * 0xD6E8FEB86659FD93ULL;
  return Rng(h);
}

}  // namespace dart
