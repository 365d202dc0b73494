#include "memprobe/idx.hpp"

#include <zlib.h>

#include <fstream>
#include <iterator>
#include <string>

#include "memprobe/error.hpp"

namespace memprobe {
namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t checked_magic(std::span<const std::uint8_t> bytes, std::uint32_t expected,
                            const char* what) {
  if (bytes.size() < 4) throw Error(ErrorCode::TruncatedPayload, std::string(what) + " header");
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic != expected) {
    throw Error(ErrorCode::WrongMagic,
                std::string(what) + " magic " + std::to_string(magic) + ", expected " +
                    std::to_string(expected));
  }
  return magic;
}

}  // namespace

bool is_gzip(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 2 && bytes[0] == 0x1F && bytes[1] == 0x8B;
}

std::vector<std::uint8_t> gunzip(std::span<const std::uint8_t> bytes) {
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw Error(ErrorCode::IoError, "inflateInit2");
  zs.next_in = const_cast<Bytef*>(bytes.data());
  zs.avail_in = static_cast<uInt>(bytes.size());

  std::vector<std::uint8_t> out;
  std::uint8_t chunk[1 << 16];
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = chunk;
    zs.avail_out = sizeof(chunk);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw Error(ErrorCode::TruncatedPayload, "corrupt gzip stream");
    }
    out.insert(out.end(), chunk, chunk + (sizeof(chunk) - zs.avail_out));
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw Error(ErrorCode::TruncatedPayload, "gzip stream ended early");
    }
  }
  inflateEnd(&zs);
  return out;
}

std::vector<std::uint8_t> gzip(std::span<const std::uint8_t> bytes) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 16 + MAX_WBITS, 8,
                   Z_DEFAULT_STRATEGY) != Z_OK) {
    throw Error(ErrorCode::IoError, "deflateInit2");
  }
  std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(bytes.size())));
  zs.next_in = const_cast<Bytef*>(bytes.data());
  zs.avail_in = static_cast<uInt>(bytes.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw Error(ErrorCode::IoError, "deflate");
  out.resize(zs.total_out);
  return out;
}

IdxData parse_idx(std::span<const std::uint8_t> image_bytes,
                  std::span<const std::uint8_t> label_bytes) {
  std::vector<std::uint8_t> image_buf, label_buf;
  if (is_gzip(image_bytes)) {
    image_buf = gunzip(image_bytes);
    image_bytes = image_buf;
  }
  if (is_gzip(label_bytes)) {
    label_buf = gunzip(label_bytes);
    label_bytes = label_buf;
  }

  checked_magic(image_bytes, kIdxImageMagic, "images");
  if (image_bytes.size() < 16) throw Error(ErrorCode::TruncatedPayload, "images header");
  IdxData data;
  data.count = read_be32(image_bytes, 4);
  data.rows = read_be32(image_bytes, 8);
  data.cols = read_be32(image_bytes, 12);
  const std::size_t expected = data.count * data.rows * data.cols;
  if (image_bytes.size() - 16 != expected) {
    throw Error(ErrorCode::TruncatedPayload, "images payload has " +
                                                 std::to_string(image_bytes.size() - 16) +
                                                 " bytes, header says " + std::to_string(expected));
  }

  checked_magic(label_bytes, kIdxLabelMagic, "labels");
  if (label_bytes.size() < 8) throw Error(ErrorCode::TruncatedPayload, "labels header");
  const std::size_t label_count = read_be32(label_bytes, 4);
  if (label_bytes.size() - 8 != label_count) {
    throw Error(ErrorCode::TruncatedPayload, "labels payload has " +
                                                 std::to_string(label_bytes.size() - 8) +
                                                 " bytes, header says " +
                                                 std::to_string(label_count));
  }
  if (label_count != data.count) {
    throw Error(ErrorCode::CountMismatch, std::to_string(data.count) + " images vs " +
                                              std::to_string(label_count) + " labels");
  }

  data.pixels.assign(image_bytes.begin() + 16, image_bytes.end());
  data.labels.assign(label_bytes.begin() + 8, label_bytes.end());
  return data;
}

IdxBytes serialize_idx(const IdxData& data) {
  IdxBytes out;
  out.images.reserve(16 + data.pixels.size());
  write_be32(out.images, kIdxImageMagic);
  write_be32(out.images, static_cast<std::uint32_t>(data.count));
  write_be32(out.images, static_cast<std::uint32_t>(data.rows));
  write_be32(out.images, static_cast<std::uint32_t>(data.cols));
  out.images.insert(out.images.end(), data.pixels.begin(), data.pixels.end());

  out.labels.reserve(8 + data.labels.size());
  write_be32(out.labels, kIdxLabelMagic);
  write_be32(out.labels, static_cast<std::uint32_t>(data.labels.size()));
  out.labels.insert(out.labels.end(), data.labels.begin(), data.labels.end());
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

IdxData load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  return parse_idx(read_file_bytes(images), read_file_bytes(labels));
}

IdxData load_idx_split(const std::filesystem::path& dir, const std::string& prefix) {
  auto pick = [&](const std::string& stem) {
    const auto plain = dir / stem;
    const auto gz = dir / (stem + ".gz");
    if (std::filesystem::exists(gz)) return gz;
    if (std::filesystem::exists(plain)) return plain;
    throw Error(ErrorCode::IoError, "missing " + gz.string());
  };
  return load_idx(pick(prefix + "-images-idx3-ubyte"), pick(prefix + "-labels-idx1-ubyte"));
}

}  // namespace memprobe
