#pragma once

#include <nlohmann/json.hpp>

#include "memprobe/diagnosis.hpp"
#include "memprobe/forest.hpp"
#include "memprobe/network.hpp"

namespace memprobe {

nlohmann::json to_json(const LayerSpec& layer);
LayerSpec layer_from_json(const nlohmann::json& j);

nlohmann::json to_json(const NetworkSpec& spec);
NetworkSpec network_from_json(const nlohmann::json& j);

nlohmann::json to_json(const OptimizerSpec& spec);
OptimizerSpec optimizer_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ForestParams& params);
ForestParams forest_from_json(const nlohmann::json& j);

nlohmann::json to_json(const DiagnosisThresholds& t);
DiagnosisThresholds thresholds_from_json(const nlohmann::json& j);

/// Seeds are 64-bit; JSON numbers beyond 2^53 lose precision in many
/// readers, so they travel as decimal strings.
nlohmann::json seed_to_json(std::uint64_t seed);
std::uint64_t seed_from_json(const nlohmann::json& j);

}  // namespace memprobe
