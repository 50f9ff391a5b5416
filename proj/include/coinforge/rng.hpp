#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

namespace coinforge {

/// SplitMix64 finalizer; used to derive independent seed streams.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the `index`-th stream derived from `seed` under a named purpose.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose,
                                    std::uint64_t index = 0) noexcept {
  return splitmix64(splitmix64(seed ^ splitmix64(purpose)) + index);
}

// Bounded draws by hand; identical streams on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t uniform(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  /// Uniform real in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return unit() < p; }

  bool bit() { return (engine_() >> 63) != 0; }

  /// First `count` entries of a uniformly random permutation of `pool`
  /// (partial Fisher-Yates, i.e. sampling without replacement).
  template <typename T>
  std::vector<T> sample_without_replacement(std::vector<T> pool, std::size_t count) {
    for (std::size_t i = 0; i < count && i < pool.size(); ++i) {
      const std::size_t j = i + static_cast<std::size_t>(uniform(pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(std::min(count, pool.size()));
    return pool;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace coinforge
