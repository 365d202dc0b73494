#include "memprobe/checkpoint.hpp"

#include <boost/crc.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

#include "json_io.hpp"
#include "memprobe/error.hpp"
#include "memprobe/idx.hpp"

namespace memprobe {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint tensors are written in host byte order");

constexpr char kMagic[8] = {'M', 'P', 'C', 'K', 'P', 'T', '0', '1'};

using nlohmann::json;

std::uint32_t crc32(const char* data, std::size_t n) {
  boost::crc_32_type crc;
  crc.process_bytes(data, n);
  return crc.checksum();
}

template <typename T>
void append_raw(std::string& out, const T& value) {
  out.append(reinterpret_cast<const char*>(&value), sizeof(T));
}

void append_tensor(std::string& out, const double* data, Eigen::Index n) {
  out.append(reinterpret_cast<const char*>(data), static_cast<std::size_t>(n) * sizeof(double));
}

}  // namespace

std::string encode_checkpoint(const TrainedNetwork& net, const std::string& tag) {
  json tensors = json::array();
  auto describe = [&](const char* role, std::size_t layer, const Eigen::MatrixXd& m) {
    tensors.push_back({{"role", role}, {"layer", layer}, {"shape", {m.rows(), m.cols()}}});
  };
  const bool has_acc = net.optimizer_state.accumulators.size() == net.params.size();
  for (std::size_t i = 0; i < net.params.size(); ++i) {
    if (net.params[i].weights.size() == 0) continue;
    describe("weights", i, net.params[i].weights);
    describe("bias", i, net.params[i].bias);
  }
  if (has_acc) {
    for (std::size_t i = 0; i < net.params.size(); ++i) {
      if (net.params[i].weights.size() == 0) continue;
      describe("acc_weights", i, net.optimizer_state.accumulators[i].weights);
      describe("acc_bias", i, net.optimizer_state.accumulators[i].bias);
    }
  }
  const json header{{"spec", to_json(net.spec)},
                    {"epoch", net.epoch},
                    {"init_seed", seed_to_json(net.init_seed)},
                    {"train_seed", seed_to_json(net.train_seed)},
                    {"optimizer_steps", net.optimizer_state.steps},
                    {"tag", tag},
                    {"tensors", tensors}};
  const std::string header_text = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  append_raw(out, static_cast<std::uint64_t>(header_text.size()));
  out += header_text;
  for (std::size_t i = 0; i < net.params.size(); ++i) {
    if (net.params[i].weights.size() == 0) continue;
    append_tensor(out, net.params[i].weights.data(), net.params[i].weights.size());
    append_tensor(out, net.params[i].bias.data(), net.params[i].bias.size());
  }
  if (has_acc) {
    for (std::size_t i = 0; i < net.params.size(); ++i) {
      if (net.params[i].weights.size() == 0) continue;
      const auto& a = net.optimizer_state.accumulators[i];
      append_tensor(out, a.weights.data(), a.weights.size());
      append_tensor(out, a.bias.data(), a.bias.size());
    }
  }
  append_raw(out, crc32(out.data(), out.size()));
  return out;
}

LoadedCheckpoint decode_checkpoint(const std::string& bytes) {
  auto corrupt = [](const std::string& why) { return Error(ErrorCode::CorruptStore, "checkpoint: " + why); };
  if (bytes.size() < sizeof(kMagic) + 8 + 4 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw corrupt("bad magic");
  }
  std::uint32_t stored_crc;
  std::memcpy(&stored_crc, bytes.data() + bytes.size() - 4, 4);
  if (crc32(bytes.data(), bytes.size() - 4) != stored_crc) throw corrupt("CRC mismatch");

  std::uint64_t header_len;
  std::memcpy(&header_len, bytes.data() + sizeof(kMagic), 8);
  std::size_t pos = sizeof(kMagic) + 8;
  if (header_len > bytes.size() - pos - 4) throw corrupt("header overruns file");
  json header;
  try {
    header = json::parse(bytes.substr(pos, header_len));
  } catch (const json::exception& e) {
    throw corrupt(e.what());
  }
  pos += header_len;

  LoadedCheckpoint out;
  TrainedNetwork& net = out.net;
  net.spec = network_from_json(header.at("spec"));
  net.epoch = header.at("epoch").get<std::int64_t>();
  net.init_seed = seed_from_json(header.at("init_seed"));
  net.train_seed = seed_from_json(header.at("train_seed"));
  net.optimizer_state.steps = header.at("optimizer_steps").get<std::int64_t>();
  out.tag = header.at("tag").get<std::string>();
  net.params.resize(net.spec.layers.size());

  for (const auto& t : header.at("tensors")) {
    const std::string role = t.at("role");
    const auto layer = t.at("layer").get<std::size_t>();
    const auto rows = t.at("shape")[0].get<Eigen::Index>();
    const auto cols = t.at("shape")[1].get<Eigen::Index>();
    if (layer >= net.params.size()) throw corrupt("tensor for missing layer");
    const auto n = static_cast<std::size_t>(rows * cols);
    if (pos + n * sizeof(double) > bytes.size() - 4) throw corrupt("tensor overruns file");
    Eigen::MatrixXd m(rows, cols);
    std::memcpy(m.data(), bytes.data() + pos, n * sizeof(double));
    pos += n * sizeof(double);
    if (role.starts_with("acc_") && net.optimizer_state.accumulators.empty()) {
      net.optimizer_state.accumulators.resize(net.params.size());
    }
    if (role == "weights") {
      net.params[layer].weights = std::move(m);
    } else if (role == "bias") {
      net.params[layer].bias = m.col(0);
    } else if (role == "acc_weights") {
      net.optimizer_state.accumulators[layer].weights = std::move(m);
    } else if (role == "acc_bias") {
      net.optimizer_state.accumulators[layer].bias = m.col(0);
    } else {
      throw corrupt("unknown tensor role " + role);
    }
  }
  if (pos != bytes.size() - 4) throw corrupt("trailing bytes");

  const TrainedNetwork reference = init_network(net.spec, 0);
  for (std::size_t i = 0; i < net.params.size(); ++i) {
    if (net.params[i].weights.rows() != reference.params[i].weights.rows() ||
        net.params[i].weights.cols() != reference.params[i].weights.cols() ||
        net.params[i].bias.size() != reference.params[i].bias.size()) {
      throw corrupt("tensor shapes disagree with the network spec");
    }
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const TrainedNetwork& net,
                     const std::string& tag) {
  const std::string bytes = encode_checkpoint(net, tag);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoError, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  const auto raw = read_file_bytes(path);
  return decode_checkpoint(std::string(raw.begin(), raw.end()));
}

}  // namespace memprobe
