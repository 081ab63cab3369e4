#pragma once

#include "confined/types.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace confined {

/// splitmix64 finalizer; used to derive independent child seeds from
/// (seed, tag) pairs so every trajectory/purpose owns its own stream.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag,
                                 std::uint64_t index = 0) {
  return mix64(mix64(seed ^ mix64(tag)) + index);
}

/// Deterministic per-trajectory noise stream. All draws are fully specified
/// (mt19937_64 plus hand-rolled transforms), so identical (seed, stream,
/// draw index) gives identical variates on every run and thread schedule.
class NoiseStream {
 public:
  NoiseStream() : NoiseStream(0, 0) {}
  NoiseStream(std::uint64_t seed, std::uint64_t stream)
      : engine_(derive_seed(seed, 0x6e6f697365ULL, stream)) {}

  std::uint64_t bits() { return engine_(); }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Marsaglia polar method (one spare cached).
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  /// +1 or -1 with equal probability.
  double rademacher() { return (engine_() >> 63) ? 1.0 : -1.0; }

  double draw(bool use_rademacher) {
    return use_rademacher ? rademacher() : gaussian();
  }

  template <typename Derived>
  void fill_gaussian(Eigen::MatrixBase<Derived>& out) {
    for (Index i = 0; i < out.rows(); ++i)
      for (Index j = 0; j < out.cols(); ++j) out(i, j) = gaussian();
  }

  template <typename Derived>
  void fill(Eigen::MatrixBase<Derived>& out, bool use_rademacher) {
    for (Index i = 0; i < out.rows(); ++i)
      for (Index j = 0; j < out.cols(); ++j) out(i, j) = draw(use_rademacher);
  }

  VecXd gaussian_vector(Index n) {
    VecXd v(n);
    fill_gaussian(v);
    return v;
  }

  VecXd vector(Index n, bool use_rademacher) {
    VecXd v(n);
    fill(v, use_rademacher);
    return v;
  }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    // Rejection to avoid modulo bias.
    const std::uint64_t limit = ~std::uint64_t(0) - (~std::uint64_t(0) % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace confined
