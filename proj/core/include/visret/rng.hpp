#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace visret {

// FNV-1a 64-bit hash. offset basis 0xcbf29ce484222325, prime 0x100000001b3.
inline uint64_t fnv1a64(std::string_view data) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// SplitMix64 (Steele, Lea & Flood 2014). The full algorithm is spelled out
// here so replays can be reproduced in any language:
//
//   next():  state += 0x9E3779B97F4A7C15
//            z = state
//            z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//            z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//            return z ^ (z >> 31)
//
//   uniform_below(n):  high 64 bits of next() * n  (Lemire multiply-shift)
//
//   uniform_double(): (next() >> 11) * 2^-53, in [0, 1)
//
// Per-sample streams are derived with derive_rng(seed, key), which seeds a
// fresh generator with seed ^ fnv1a64(key); parallel processing order can
// therefore never change results.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform integer in [0, n). n must be >= 1.
  uint64_t uniform_below(uint64_t n) {
    return static_cast<uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  double uniform_double() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  // Uniform in [-1, 1).
  double uniform_pm1() { return 2.0 * uniform_double() - 1.0; }

 private:
  uint64_t state_;
};

inline SplitMix64 derive_rng(uint64_t seed, std::string_view key) {
  return SplitMix64(seed ^ fnv1a64(key));
}

// In-place Fisher-Yates shuffle driven by the generator above.
template <typename T>
void shuffle(std::vector<T>& items, SplitMix64& rng) {
  for (size_t i = items.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(rng.uniform_below(i));
    std::swap(items[i - 1], items[j]);
  }
}

// First k elements of a seeded partial Fisher-Yates pass over `pool`.
// k must be <= pool.size(); the pool order defines the sample space.
template <typename T>
std::vector<T> sample_without_replacement(std::vector<T> pool, size_t k,
                                          SplitMix64& rng) {
  for (size_t i = 0; i < k; ++i) {
    size_t j = i + static_cast<size_t>(rng.uniform_below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace visret
