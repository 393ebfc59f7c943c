// Portable seeded random numbers.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The standard distributions are implementation-defined, so every
// draw below is derived from raw engine output with a documented formula:
//   uniform()     top 53 bits / 2^53, in [0, 1)
//   below(n)      Lemire's multiply-shift with rejection, in [0, n)
//   normal()      Box-Muller on two uniform() draws (second value discarded)
//   shuffle()     Fisher-Yates from the back using below()
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace plantscan {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t below(std::uint64_t n);
  double normal(double mean = 0.0, double stddev = 1.0);

  /// Derives an independent seed for a sub-stream (e.g. one per sample).
  std::uint64_t fork() { return next() ^ 0x9E3779B97F4A7C15ULL; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace plantscan
