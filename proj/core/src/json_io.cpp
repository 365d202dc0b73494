#include "json_io.hpp"

#include <string>

#include "memprobe/error.hpp"

namespace memprobe {

using nlohmann::json;

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

json to_json(const LayerSpec& l) {
  json j{{"kind", to_string(l.kind)}};
  switch (l.kind) {
    case LayerKind::Dense:
      j["units"] = l.units;
      j["activation"] = to_string(l.activation);
      break;
    case LayerKind::Conv2d:
      j["filters"] = l.units;
      j["kernel"] = {l.kernel_h, l.kernel_w};
      j["activation"] = to_string(l.activation);
      break;
    case LayerKind::MaxPool2d:
      j["pool"] = {l.pool_h, l.pool_w};
      break;
    case LayerKind::Dropout:
      j["rate"] = l.rate;
      break;
    case LayerKind::Flatten:
      break;
  }
  return j;
}

LayerSpec layer_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind")) {
    throw Error(ErrorCode::InvalidSpec, "layer needs a 'kind'");
  }
  const LayerKind kind = layer_kind_from_string(j.at("kind").get<std::string>());
  const Activation act = activation_from_string(get_or<std::string>(j, "activation", "none"));
  auto pair = [&](const char* key) {
    const auto v = get_or<std::vector<int>>(j, key, {});
    if (v.size() != 2) throw Error(ErrorCode::InvalidSpec, std::string("'") + key + "' needs two values");
    return v;
  };
  switch (kind) {
    case LayerKind::Dense: return LayerSpec::dense(get_or(j, "units", 0), act);
    case LayerKind::Conv2d: {
      const auto k = pair("kernel");
      return LayerSpec::conv2d(get_or(j, "filters", 0), k[0], k[1], act);
    }
    case LayerKind::MaxPool2d: {
      const auto p = pair("pool");
      return LayerSpec::maxpool2d(p[0], p[1]);
    }
    case LayerKind::Dropout: return LayerSpec::dropout(get_or(j, "rate", 0.0));
    case LayerKind::Flatten: return LayerSpec::flatten();
  }
  throw Error(ErrorCode::InvalidSpec, "unreachable layer kind");
}

json to_json(const NetworkSpec& spec) {
  json layers = json::array();
  for (const auto& l : spec.layers) layers.push_back(to_json(l));
  return {{"preset", spec.preset_name},
          {"input_shape", {spec.input_height, spec.input_width}},
          {"layers", layers}};
}

NetworkSpec network_from_json(const json& j) {
  NetworkSpec spec;
  const auto shape = get_or<std::vector<int>>(j, "input_shape", {28, 28});
  if (shape.size() != 2) throw Error(ErrorCode::InvalidSpec, "input_shape needs two values");
  spec.input_height = shape[0];
  spec.input_width = shape[1];
  spec.preset_name = get_or<std::string>(j, "preset", "");
  if (j.contains("layers")) {
    for (const auto& l : j.at("layers")) spec.layers.push_back(layer_from_json(l));
  } else if (!spec.preset_name.empty()) {
    spec = preset(spec.preset_name, spec.input_height, spec.input_width);
  }
  spec.validate();
  return spec;
}

json to_json(const OptimizerSpec& s) {
  json j{{"kind", to_string(s.kind)}, {"learning_rate", s.learning_rate},
         {"batch_size", s.batch_size}};
  if (s.kind == OptimizerKind::RmsProp) {
    j["rho"] = s.rho;
    j["epsilon"] = s.epsilon;
  }
  return j;
}

OptimizerSpec optimizer_from_json(const json& j) {
  const OptimizerKind kind = optimizer_kind_from_string(get_or<std::string>(j, "kind", "sgd"));
  OptimizerSpec s = kind == OptimizerKind::Sgd ? OptimizerSpec::sgd() : OptimizerSpec::rmsprop();
  s.learning_rate = get_or(j, "learning_rate", s.learning_rate);
  s.batch_size = get_or(j, "batch_size", s.batch_size);
  s.rho = get_or(j, "rho", s.rho);
  s.epsilon = get_or(j, "epsilon", s.epsilon);
  s.validate();
  return s;
}

json to_json(const ForestParams& p) {
  return {{"n_trees", p.n_trees},
          {"mtry", p.mtry ? json(*p.mtry) : json(nullptr)},
          {"min_leaf", p.min_leaf},
          {"max_depth", p.max_depth ? json(*p.max_depth) : json(nullptr)},
          {"bootstrap", p.bootstrap}};
}

ForestParams forest_from_json(const json& j) {
  ForestParams p;
  p.n_trees = get_or(j, "n_trees", p.n_trees);
  if (j.contains("mtry") && !j.at("mtry").is_null()) p.mtry = j.at("mtry").get<int>();
  p.min_leaf = get_or(j, "min_leaf", p.min_leaf);
  if (j.contains("max_depth") && !j.at("max_depth").is_null()) {
    p.max_depth = j.at("max_depth").get<int>();
  }
  p.bootstrap = get_or(j, "bootstrap", p.bootstrap);
  return p;
}

json to_json(const DiagnosisThresholds& t) {
  return {{"delta_mem", t.delta_mem}, {"alpha", t.alpha}};
}

DiagnosisThresholds thresholds_from_json(const json& j) {
  DiagnosisThresholds t;
  t.delta_mem = get_or(j, "delta_mem", t.delta_mem);
  t.alpha = get_or(j, "alpha", t.alpha);
  return t;
}

json seed_to_json(std::uint64_t seed) { return std::to_string(seed); }

std::uint64_t seed_from_json(const json& j) {
  if (j.is_string()) return std::stoull(j.get<std::string>());
  if (j.is_number_unsigned() || j.is_number_integer()) return j.get<std::uint64_t>();
  throw Error(ErrorCode::InvalidConfig, "seed must be an integer or decimal string");
}

}  // namespace memprobe
