#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "memprobe/idx.hpp"

namespace memprobe {

using Labels = std::vector<int>;

enum class DataSource { Pixels, GaussianNoise };

/// N binary-labelled rasters. Values are stored sample-major, so the buffer
/// doubles as a column-major (H*W) x N matrix with one sample per column.
struct ImageDataset {
  std::size_t count = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;
  Labels labels;
  std::array<std::string, 2> class_names;
  std::array<int, 2> class_ids{0, 1};
  DataSource source = DataSource::Pixels;
  std::optional<std::uint64_t> seed;
  /// Index of every sample in the pool it was drawn from.
  std::vector<std::size_t> source_indices;

  std::size_t pixels_per_image() const { return height * width; }

  std::span<const double> image(std::size_t i) const {
    return {values.data() + i * pixels_per_image(), pixels_per_image()};
  }
  std::span<double> image(std::size_t i) {
    return {values.data() + i * pixels_per_image(), pixels_per_image()};
  }

  Eigen::Map<const Eigen::MatrixXd> as_matrix() const {
    return {values.data(), static_cast<Eigen::Index>(pixels_per_image()),
            static_cast<Eigen::Index>(count)};
  }

  /// Throws InvalidSpec if a structural invariant is broken.
  void validate() const;
};

struct DatasetPair {
  ImageDataset train;
  ImageDataset validation;
};

/// Display names of the ten Fashion-MNIST classes, indexed by label.
std::string fashion_class_name(int class_id);

/// Picks per_class samples of class_a (relabelled 0) and class_b (relabelled
/// 1) and scales pixels into [0, 1].
ImageDataset select_binary_subset(const IdxData& pool, int class_a, int class_b,
                                  std::size_t per_class, std::uint64_t seed);

/// Same labels and shape as dataset, every value replaced by a Normal(0, 1) draw.
ImageDataset gaussian_noise_like(const ImageDataset& dataset, std::uint64_t seed);

/// Noise dataset with per_class labels of each class in shuffled order, for
/// runs that have no image files at hand.
ImageDataset balanced_noise_dataset(std::size_t per_class, std::size_t height, std::size_t width,
                                    std::uint64_t seed);

/// Draws a balanced validation set of val_size samples of train's two classes
/// from pool, skipping pool indices listed in excluded (pass the train
/// indices when train was drawn from the same pool).
DatasetPair make_validation_split(const IdxData& pool, ImageDataset train,
                                  std::span<const std::size_t> excluded, std::size_t val_size,
                                  std::uint64_t seed);

}  // namespace memprobe
