#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace gridcast {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic child seed for stream `k` of a master seed. Replications,
/// bootstrap draws and worker threads each get their own stream so results
/// are independent of scheduling.
inline std::uint64_t child_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream + 0x51ed2701ab0517a9ULL));
}

/// mt19937_64 with hand-rolled variate transforms. The standard engine is
/// bit-portable but the standard distributions are not, so the transforms
/// here are spelled out to keep outputs identical across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(splitmix64(seed)) {}

  std::uint64_t raw() { return eng_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1]; safe as a log() argument.
  double uniform01_open() { return 1.0 - uniform01(); }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  /// Exponential with the given rate (mean 1/rate).
  double exponential(double rate) { return -std::log(uniform01_open()) / rate; }

  /// Standard normal via Box-Muller (no cached spare).
  double normal() {
    double u1 = uniform01_open();
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t integer(std::uint64_t n) {
    // Rejection sampling to avoid modulo bias.
    const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % n;
    std::uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % n;
  }

  /// Sample an index from unnormalized nonnegative weights.
  template <class Container>
  std::size_t categorical(const Container& weights) {
    const std::size_t n = static_cast<std::size_t>(weights.size());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += weights[i];
    double u = uniform01() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    return n - 1;
  }

 private:
  std::mt19937_64 eng_;
};

} // namespace gridcast
