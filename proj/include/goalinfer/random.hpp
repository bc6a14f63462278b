#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace goalinfer {

/// splitmix64 finalizer; used to derive independent sub-stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
  return mix_seed(mix_seed(parent) ^ mix_seed(index + 0x632be59bd9b4e019ULL));
}

/// Seeded pseudo-random stream. Every stochastic routine takes one of these
/// explicitly; there is no global generator.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed = 0) : engine_(mix_seed(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() {
    const double u = std::generate_canonical<double, 64>(engine_);
    // Some library versions can round up to exactly 1.
    return u < 1.0 ? u : std::nextafter(1.0, 0.0);
  }

  /// Uniform on (0, 1]; safe to take the log of.
  double uniform_pos() { return 1.0 - uniform(); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal(double mean = 0.0, double stddev = 1.0) {
    // Box-Muller on our own uniforms keeps streams identical across standard
    // library implementations.
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return mean + stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

  Eigen::Vector2d unit_square() {
    const double x = uniform();
    const double y = uniform();
    return {x, y};
  }

  /// Independent child stream; the parent advances by one draw.
  RandomStream split() { return RandomStream(derive_seed(next_u64(), 0)); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace goalinfer
