#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <utility>

namespace memprobe {

/// Stream tags used when deriving sub-seeds from a master seed. Keeping them
/// in one place makes every random stream in an experiment re-derivable.
enum class Stream : std::uint64_t {
  Dataset = 1,
  Validation = 2,
  Noise = 3,
  ValidationNoise = 4,
  Perturbation = 5,
  NetworkInit = 6,
  Training = 7,
  Cell = 8,
  ObservedForest = 9,
  LabelShuffle = 10,
  PermutationForest = 11,
  Tree = 12,
  Epoch = 13,
  Image = 14,
  NoiseLabels = 15,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Mixes a path of integers into a base seed. derive_seed(s, {a, b}) is a
/// pure function, so a sub-stream can be rebuilt without replaying others.
constexpr std::uint64_t derive_seed(std::uint64_t base,
                                    std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = splitmix64(base);
  for (std::uint64_t p : path) h = splitmix64(h ^ splitmix64(p + 0x632BE59BD9B4E019ULL));
  return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t base, Stream stream) noexcept {
  return derive_seed(base, {static_cast<std::uint64_t>(stream)});
}

constexpr std::uint64_t derive_seed(std::uint64_t base, Stream stream,
                                    std::uint64_t index) noexcept {
  return derive_seed(base, {static_cast<std::uint64_t>(stream), index});
}

/// mt19937_64 with hand-written distributions: the engine sequence is fixed by
/// the standard but std::*_distribution output is not, and results must be
/// reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t index(std::uint64_t n) {
    const std::uint64_t limit = std::uint64_t(-1) - (std::uint64_t(-1) % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Standard normal via the Marsaglia polar method.
  double normal() {
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

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace memprobe
