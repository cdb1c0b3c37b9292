#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>

namespace steinshrink {

/// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Seed for replicate `index` of stream `seed`. Pure function of its inputs,
/// so replicate r sees the same randomness whatever the sharding.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632BE59BD9B4E019ull));
}

/// xoshiro256++ (Blackman & Vigna). Cheap to seed, which matters because the
/// Monte Carlo engine reseeds once per replicate.
class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256pp(std::uint64_t seed) {
    std::uint64_t z = seed;
    for (auto& s : state_) {
      z += 0x9E3779B97F4A7C15ull;
      s = splitmix64(z);
    }
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t state_[4];
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform on (0, 1].
  double uniform_open0() { return 1.0 - uniform(); }
  double normal() { return normal_(engine_); }

  /// Gamma(shape, rate) in the shape-rate parameterization.
  double gamma(double shape, double rate) {
    std::gamma_distribution<double> g(shape, 1.0 / rate);
    return g(engine_);
  }

  double exponential(double rate) { return -std::log(uniform_open0()) / rate; }

  /// Index in [0, n).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

  double rademacher() { return (engine_() >> 63) ? 1.0 : -1.0; }

  /// Uniform point on the unit sphere S^{d-1}.
  void unit_sphere(std::span<double> out) {
    double s = 0.0;
    do {
      s = 0.0;
      for (auto& v : out) {
        v = normal();
        s += v * v;
      }
    } while (s == 0.0);
    const double inv = 1.0 / std::sqrt(s);
    for (auto& v : out) v *= inv;
  }

  /// Uniform point in the unit ball B^d (direction times U^{1/d}).
  void unit_ball(std::span<double> out) {
    unit_sphere(out);
    const double r = std::pow(uniform(), 1.0 / static_cast<double>(out.size()));
    for (auto& v : out) v *= r;
  }

  Xoshiro256pp& engine() { return engine_; }

 private:
  Xoshiro256pp engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace steinshrink
