#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

#include <Eigen/Core>

namespace sutrack {

// SplitMix64; used to expand seeds and as the finalizer of SeedHasher.
struct SplitMix64 {
  std::uint64_t state;

  constexpr explicit SplitMix64(std::uint64_t s) : state(s) {}

  constexpr std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
};

/// Stable 64-bit hash for seed derivation. Streams are identified by the
/// values hashed in, not by grid position, so reordering a parameter sweep
/// does not change any per-trial random stream.
class SeedHasher {
 public:
  SeedHasher& add(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h_ = (h_ ^ ((v >> (8 * i)) & 0xffu)) * 0x100000001b3ull;
    }
    return *this;
  }

  SeedHasher& add(std::string_view s) {
    for (unsigned char c : s) h_ = (h_ ^ c) * 0x100000001b3ull;
    h_ = (h_ ^ 0xffu) * 0x100000001b3ull;  // delimiter, keeps "ab","c" != "a","bc"
    return *this;
  }

  [[nodiscard]] std::uint64_t finish() const { return SplitMix64(h_).next(); }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ull;  // FNV-1a offset basis
};

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                 std::uint64_t index = 0) {
  return SeedHasher().add(master).add(tag).add(index).finish();
}

/// xoshiro256++ with a polar-method Gaussian. Self-contained so that seeded
/// streams replay bit-identically on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    SplitMix64 sm(seed);
    for (auto& w : s_) w = sm.next();
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [-1, 1).
  double uniform_signed() { return 2.0 * uniform() - 1.0; }

  /// Standard normal via the Marsaglia polar method.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = uniform_signed();
      v = uniform_signed();
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  Eigen::VectorXd gaussian_vector(int n) {
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = gaussian();
    return x;
  }

  /// Uniform point on the unit sphere in R^n.
  Eigen::VectorXd unit_vector(int n) {
    for (;;) {
      Eigen::VectorXd x = gaussian_vector(n);
      const double norm = x.norm();
      if (norm > 1e-12) return x / norm;
    }
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sutrack
