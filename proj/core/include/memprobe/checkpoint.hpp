#pragma once

#include <filesystem>
#include <string>

#include "memprobe/network.hpp"

namespace memprobe {

/// Checkpoint container:
///   "MPCKPT01" | u64 header length | JSON header | raw little-endian float64
///   tensors in header order | u32 CRC-32 of everything before it.
/// The header carries the network spec, epoch, seeds, optimizer step count,
/// every tensor's shape and a caller-supplied tag (the config hash).
void save_checkpoint(const std::filesystem::path& path, const TrainedNetwork& net,
                     const std::string& tag = {});

struct LoadedCheckpoint {
  TrainedNetwork net;
  std::string tag;
};

/// Throws CorruptStore on a bad magic, CRC mismatch or inconsistent header.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

std::string encode_checkpoint(const TrainedNetwork& net, const std::string& tag);
LoadedCheckpoint decode_checkpoint(const std::string& bytes);

}  // namespace memprobe
