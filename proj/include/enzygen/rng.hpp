#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <utility>
#include <vector>

namespace enzygen {

// Deterministic random source. Distributions are computed from raw engine
// bits so results do not depend on the standard library's distribution code.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Independent stream keyed by (seed, stream...).
  Rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream);

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();

  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> stream);

}  // namespace enzygen
