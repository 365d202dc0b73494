#include "memprobe/dataset.hpp"

#include <algorithm>
#include <unordered_set>

#include "memprobe/error.hpp"
#include "memprobe/rng.hpp"

namespace memprobe {
namespace {

constexpr std::array<const char*, 10> kFashionNames = {
    "t-shirt/top", "trouser", "pullover", "dress", "coat",
    "sandal",      "shirt",   "sneaker",  "bag",   "ankle boot"};

std::vector<std::size_t> indices_of_class(const IdxData& pool, int cls,
                                          const std::unordered_set<std::size_t>& excluded) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pool.count; ++i) {
    if (pool.labels[i] == cls && !excluded.contains(i)) out.push_back(i);
  }
  return out;
}

ImageDataset draw_balanced(const IdxData& pool, int class_a, int class_b,
                           std::size_t count_a, std::size_t count_b,
                           const std::unordered_set<std::size_t>& excluded, std::uint64_t seed) {
  Rng rng(seed);
  auto a = indices_of_class(pool, class_a, excluded);
  auto b = indices_of_class(pool, class_b, excluded);
  if (a.size() < count_a || b.size() < count_b) {
    throw Error(ErrorCode::InsufficientSamples,
                "need " + std::to_string(count_a) + "/" + std::to_string(count_b) +
                    " samples of classes " + std::to_string(class_a) + "/" +
                    std::to_string(class_b) + ", have " + std::to_string(a.size()) + "/" +
                    std::to_string(b.size()));
  }
  rng.shuffle(std::span(a));
  rng.shuffle(std::span(b));

  std::vector<std::pair<std::size_t, int>> picked;
  picked.reserve(count_a + count_b);
  for (std::size_t i = 0; i < count_a; ++i) picked.emplace_back(a[i], 0);
  for (std::size_t i = 0; i < count_b; ++i) picked.emplace_back(b[i], 1);
  rng.shuffle(std::span(picked));

  ImageDataset out;
  out.count = picked.size();
  out.height = pool.rows;
  out.width = pool.cols;
  out.class_ids = {class_a, class_b};
  out.class_names = {fashion_class_name(class_a), fashion_class_name(class_b)};
  out.source = DataSource::Pixels;
  out.seed = seed;
  out.values.resize(out.count * out.pixels_per_image());
  out.labels.reserve(out.count);
  out.source_indices.reserve(out.count);
  for (std::size_t n = 0; n < picked.size(); ++n) {
    const auto [idx, label] = picked[n];
    const auto src = pool.image(idx);
    auto dst = out.image(n);
    for (std::size_t p = 0; p < src.size(); ++p) dst[p] = src[p] / 255.0;
    out.labels.push_back(label);
    out.source_indices.push_back(idx);
  }
  return out;
}

}  // namespace

void ImageDataset::validate() const {
  if (values.size() != count * pixels_per_image()) {
    throw Error(ErrorCode::InvalidSpec, "value buffer does not match N*H*W");
  }
  if (labels.size() != count) throw Error(ErrorCode::InvalidSpec, "label count differs from N");
  for (int l : labels) {
    if (l != 0 && l != 1) throw Error(ErrorCode::InvalidSpec, "label outside {0,1}");
  }
  if (source == DataSource::Pixels) {
    for (double v : values) {
      if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::InvalidSpec, "pixel outside [0,1]");
    }
  }
}

std::string fashion_class_name(int class_id) {
  if (class_id >= 0 && class_id < static_cast<int>(kFashionNames.size())) {
    return kFashionNames[static_cast<std::size_t>(class_id)];
  }
  return "class " + std::to_string(class_id);
}

ImageDataset select_binary_subset(const IdxData& pool, int class_a, int class_b,
                                  std::size_t per_class, std::uint64_t seed) {
  if (class_a == class_b) throw Error(ErrorCode::InvalidSpec, "classes must differ");
  return draw_balanced(pool, class_a, class_b, per_class, per_class, {}, seed);
}

ImageDataset gaussian_noise_like(const ImageDataset& dataset, std::uint64_t seed) {
  if (dataset.count == 0) throw Error(ErrorCode::EmptyInput, "noise needs a nonempty template");
  ImageDataset out = dataset;
  Rng rng(seed);
  for (double& v : out.values) v = rng.normal();
  out.source = DataSource::GaussianNoise;
  out.seed = seed;
  return out;
}

ImageDataset balanced_noise_dataset(std::size_t per_class, std::size_t height, std::size_t width,
                                    std::uint64_t seed) {
  ImageDataset out;
  out.count = 2 * per_class;
  out.height = height;
  out.width = width;
  out.class_names = {"noise class 0", "noise class 1"};
  out.labels.assign(per_class, 0);
  out.labels.insert(out.labels.end(), per_class, 1);
  Rng rng(derive_seed(seed, Stream::NoiseLabels));
  rng.shuffle(std::span(out.labels));
  out.values.assign(out.count * height * width, 0.0);
  out.source_indices.resize(out.count);
  for (std::size_t i = 0; i < out.count; ++i) out.source_indices[i] = i;
  if (out.count == 0) return out;
  return gaussian_noise_like(out, seed);
}

DatasetPair make_validation_split(const IdxData& pool, ImageDataset train,
                                  std::span<const std::size_t> excluded, std::size_t val_size,
                                  std::uint64_t seed) {
  if (val_size == 0) {
    throw Error(ErrorCode::InsufficientSamples, "validation set must be nonempty");
  }
  const std::unordered_set<std::size_t> skip(excluded.begin(), excluded.end());
  const std::size_t count_a = (val_size + 1) / 2;
  ImageDataset validation = draw_balanced(pool, train.class_ids[0], train.class_ids[1], count_a,
                                          val_size - count_a, skip, seed);
  validation.class_names = train.class_names;
  return {std::move(train), std::move(validation)};
}

}  // namespace memprobe
