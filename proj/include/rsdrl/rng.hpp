#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace rsdrl {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derived stream seed for one (run seed, episode) pair.
inline constexpr std::uint64_t episode_seed(std::uint64_t run_seed, std::uint64_t episode) noexcept {
  return splitmix64(splitmix64(run_seed) ^ splitmix64(episode + 0x632be59bd9b4e019ULL));
}

/// mt19937_64 (fully specified by the standard) with a portable
/// bits-to-double conversion, so draws are identical across toolchains.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Index drawn from a pmf by inverse-CDF search.
  std::size_t categorical(std::span<const double> pmf) {
    const double u = uniform();
    double run = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < pmf.size(); ++i) {
      if (pmf[i] <= 0.0) continue;
      run += pmf[i];
      last_positive = i;
      if (u < run) return i;
    }
    return last_positive;
  }

  std::uint64_t next() { return engine_(); }

private:
  std::mt19937_64 engine_;
};

} // namespace rsdrl
