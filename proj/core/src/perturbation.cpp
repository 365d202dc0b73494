#include "memprobe/perturbation.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "memprobe/error.hpp"
#include "memprobe/rng.hpp"

namespace memprobe {

std::size_t shuffled_pixel_count(double fraction, std::size_t pixels) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw Error(ErrorCode::FractionOutOfRange, "fraction " + std::to_string(fraction));
  }
  // Half-up rounding, with the product nudged by a few ulps so that values
  // like 0.05 * 784 = 39.2 or 0.5 * 3 = 1.5 land where the decimal says.
  const double product = fraction * static_cast<double>(pixels);
  const auto k = static_cast<std::size_t>(std::floor(product + 0.5 + 1e-9));
  return std::min(k, pixels);
}

SValidationSet make_s_validation(const ImageDataset& train, double fraction, std::uint64_t seed) {
  const std::size_t pixels = train.pixels_per_image();
  const std::size_t k = shuffled_pixel_count(fraction, pixels);

  SValidationSet out{train, fraction, seed};
  if (k < 2) return out;

  std::vector<std::size_t> positions(pixels);
  std::vector<double> picked(k);
  for (std::size_t n = 0; n < train.count; ++n) {
    Rng rng(derive_seed(seed, Stream::Image, n));
    std::iota(positions.begin(), positions.end(), std::size_t{0});
    // Partial Fisher-Yates: the first k slots become a uniform k-subset.
    for (std::size_t i = 0; i < k; ++i) {
      std::swap(positions[i], positions[i + rng.index(pixels - i)]);
    }
    auto image = out.images.image(n);
    for (std::size_t i = 0; i < k; ++i) picked[i] = image[positions[i]];
    rng.shuffle(std::span(picked));
    for (std::size_t i = 0; i < k; ++i) image[positions[i]] = picked[i];
  }
  return out;
}

std::vector<double> standard_fraction_suite() { return {0.01, 0.05, 0.10, 1.00}; }

}  // namespace memprobe
