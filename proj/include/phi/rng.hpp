#pragma once

#include <cmath>
#include <cstdint>
#include <span>

namespace phi {

/// Counter-based generator: the n-th draw of stream (seed, stream) is a pure
/// function of (seed, stream, n), so restart r reproduces the same sequence
/// no matter which thread or in which order it runs.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix(seed ^ mix(stream + 0x632be59bd9b4e019ULL))) {}

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * kGolden); }

  /// Uniform in the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    // Box-Muller; the second variate is discarded to keep draws stateless.
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  /// Flat Dirichlet(1,...,1) sample written into `out`.
  void simplex(std::span<double> out) {
    double total = 0.0;
    for (double& v : out) {
      v = -std::log(uniform());
      total += v;
    }
    for (double& v : out) v /= total;
  }

  std::uint64_t below(std::uint64_t bound) { return next_u64() % bound; }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Derives an independent stream id from a pair of indices.
inline std::uint64_t stream_id(std::uint64_t a, std::uint64_t b) {
  return (a << 32) ^ (a >> 32) ^ (b * 0xd1b54a32d192ed03ULL);
}

}  // namespace phi
