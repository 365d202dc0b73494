#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "memprobe/dataset.hpp"

namespace memprobe {

/// A shared-structure validation set: each training image with a fixed
/// fraction of its pixels shuffled among themselves. Labels and sample
/// order are the training set's own.
struct SValidationSet {
  ImageDataset images;
  double fraction = 0.0;
  std::uint64_t seed = 0;
};

/// round-half-up(fraction * pixels).
std::size_t shuffled_pixel_count(double fraction, std::size_t pixels);

/// For every image independently, picks k = shuffled_pixel_count(fraction)
/// distinct positions and permutes the values found there. Image i uses the
/// sub-seed derive_seed(seed, Image, i), so the result does not depend on
/// processing order.
SValidationSet make_s_validation(const ImageDataset& train, double fraction, std::uint64_t seed);

/// The default grid of shuffle fractions: 1%, 5%, 10% and 100%.
std::vector<double> standard_fraction_suite();

}  // namespace memprobe
