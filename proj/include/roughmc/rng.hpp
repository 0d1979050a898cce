#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace roughmc {

/// splitmix64 finalizer over (master, index). Used to give every chain,
/// sweep cell and inner sample its own stream, independent of scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Per-chain random stream. Not shared between threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return unit_(engine_); }

  /// Uniform on (0, 1]; safe to take the log of.
  double uniform_positive() { return 1.0 - unit_(engine_); }

  double normal() { return normal_(engine_); }

  std::uint64_t next_u64() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace roughmc
