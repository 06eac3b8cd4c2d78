#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace anchorcast {

// splitmix64 finalizer; whitens seeds and derives substream keys.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based substream key: any (seed, id) pair maps to an independent
// stream, so parallel schedules over ids reproduce the sequential result.
inline std::uint64_t substream(std::uint64_t seed, std::uint64_t id) {
  return mix64(mix64(seed) ^ mix64(~id));
}

inline std::uint64_t substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return substream(substream(seed, a), b);
}

// mt19937_64 engine (output sequence is pinned by the standard) with
// hand-rolled transforms; std::*_distribution is not portable across
// standard libraries, these are.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(mix64(seed)) {}

  std::uint64_t bits() { return eng_(); }

  // [0, 1), 53-bit resolution
  double u01() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * u01(); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = u01();
    while (u1 <= 0.0) u1 = u01();
    const double u2 = u01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // [0, n); multiply-shift, bias < 2^-64 per draw
  int uniform_int(int n) {
    return static_cast<int>((static_cast<unsigned __int128>(bits()) *
                             static_cast<std::uint64_t>(n)) >> 64);
  }

  bool bernoulli(double p) { return u01() < p; }

  // Knuth; fine for the small rates used here
  int poisson(double lambda) {
    const double limit = std::exp(-lambda);
    double p = 1.0;
    int k = 0;
    do {
      ++k;
      p *= u01();
    } while (p > limit);
    return k - 1;
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(uniform_int(static_cast<int>(i)))]);
    }
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace anchorcast
