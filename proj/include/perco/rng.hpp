#pragma once

#include <cmath>
#include <cstdint>

namespace perco {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

// Derived seed for trial/worker fan-out.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(master ^ mix64(index * kGolden + 0x6a09e667f3bcc909ull));
}

// Counter-based stream keyed by (seed, stream). Output i is a pure function
// of (seed, stream, i), so disjoint streams can be consumed concurrently and
// results never depend on scheduling.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix64(seed ^ mix64(stream + kGolden))), counter_(0), has_cached_normal_(false), cached_normal_(0.0) {}

  std::uint64_t next_u64() { return mix64(key_ + (counter_++) * kGolden); }

  // Uniform in [0, 1).
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1].
  double next_unit_open() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  // Uniform in {0, ..., n-1}.
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  bool next_bernoulli(double p) { return next_unit() < p; }

  // Standard normal via Box-Muller; second variate cached.
  double next_normal() {
    if (has_cached_normal_) {
      has_cached_normal_ = false;
      return cached_normal_;
    }
    double u1 = next_unit_open();
    double u2 = next_unit();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_normal_ = r * std::sin(a);
    has_cached_normal_ = true;
    return r * std::cos(a);
  }

  double next_exponential() { return -std::log(next_unit_open()); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
  bool has_cached_normal_;
  double cached_normal_;
};

}  // namespace perco
