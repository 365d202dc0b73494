#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace memprobe {

/// Raw IDX content: unsigned bytes exactly as stored on disk.
struct IdxData {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols, row-major
  std::vector<std::uint8_t> labels;  // count

  std::size_t pixels_per_image() const { return rows * cols; }
  std::span<const std::uint8_t> image(std::size_t i) const {
    return {pixels.data() + i * pixels_per_image(), pixels_per_image()};
  }
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Parses an IDX image file and its label file. Either buffer may be
/// gzip-wrapped; that is detected from the 0x1F8B prefix.
IdxData parse_idx(std::span<const std::uint8_t> image_bytes,
                  std::span<const std::uint8_t> label_bytes);

struct IdxBytes {
  std::vector<std::uint8_t> images;
  std::vector<std::uint8_t> labels;
};

/// Inverse of parse_idx (uncompressed output).
IdxBytes serialize_idx(const IdxData& data);

bool is_gzip(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> gunzip(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> gzip(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

IdxData load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Loads "<prefix>-images-idx3-ubyte[.gz]" / "<prefix>-labels-idx1-ubyte[.gz]"
/// from dir, with prefix "train" or "t10k".
IdxData load_idx_split(const std::filesystem::path& dir, const std::string& prefix);

}  // namespace memprobe
