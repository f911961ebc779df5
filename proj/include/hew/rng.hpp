#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_set>
#include <vector>

namespace hew {

// Counter-based random streams. Every consumer derives its stream from a
// key tuple (seed, client, round, step), so draws are reproducible and
// independent of evaluation order across threads.
namespace rng_detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_key(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (0x9E3779B97F4A7C15ull + (b << 6) + (b >> 2) + splitmix64(b)));
}

}  // namespace rng_detail

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t k1 = 0, std::uint64_t k2 = 0,
                     std::uint64_t k3 = 0) {
    using rng_detail::mix_key;
    state_ = mix_key(mix_key(mix_key(seed, k1), k2), k3);
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return rng_detail::splitmix64(state_);
  }

  // Uniform in [0,1) with 53 random mantissa bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
    return next_u64() % n;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(6.283185307179586476925286766559 * u2);
    have_spare_ = true;
    return r * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Marsaglia–Tsang; alpha < 1 handled by the boost transform.
  double gamma(double alpha) {
    if (alpha <= 0.0) throw std::invalid_argument("gamma: alpha must be positive");
    if (alpha < 1.0) {
      const double u = uniform();
      return gamma(alpha + 1.0) * std::pow(u > 0 ? u : 1e-300, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (u > 0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  // Floyd's algorithm: k distinct indices from [0, n), order not meaningful.
  std::vector<int> sample_without_replacement(int n, int k) {
    if (k > n) throw std::invalid_argument("sample_without_replacement: k > n");
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(k));
    std::unordered_set<int> seen;
    seen.reserve(static_cast<std::size_t>(k) * 2);
    for (int j = n - k; j < n; ++j) {
      const int t = static_cast<int>(uniform_index(static_cast<std::uint64_t>(j) + 1));
      if (seen.count(t)) {
        seen.insert(j);
        out.push_back(j);
      } else {
        seen.insert(t);
        out.push_back(t);
      }
    }
    return out;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace hew
