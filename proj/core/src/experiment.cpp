#include "memprobe/experiment.hpp"

#include <boost/crc.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "json_io.hpp"
#include "memprobe/checkpoint.hpp"
#include "memprobe/error.hpp"
#include "memprobe/rng.hpp"
#include "memprobe/trainer.hpp"

namespace memprobe {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string crc_hex(const std::string& text) {
  boost::crc_32_type crc;
  crc.process_bytes(text.data(), text.size());
  return fmt::format("{:08x}", crc.checksum());
}

std::string_view to_string(DatasetKind k) {
  return k == DatasetKind::FashionBinary ? "fashion_binary" : "gaussian_noise";
}

std::string_view to_string(NoiseLabels l) { return l == NoiseLabels::Fashion ? "fashion" : "balanced"; }

json dataset_to_json(const DatasetConfig& d) {
  json j{{"kind", to_string(d.kind)},
         {"per_class", d.per_class},
         {"validation_per_class", d.validation_per_class}};
  const bool uses_files =
      d.kind == DatasetKind::FashionBinary || d.noise_labels == NoiseLabels::Fashion;
  if (uses_files) {
    j["data_dir"] = d.data_dir;
    j["class_a"] = d.class_a;
    j["class_b"] = d.class_b;
  }
  if (d.kind == DatasetKind::GaussianNoise) {
    j["noise_labels"] = to_string(d.noise_labels);
    if (d.noise_labels == NoiseLabels::Balanced) {
      j["height"] = d.height;
      j["width"] = d.width;
    }
  }
  return j;
}

DatasetConfig dataset_from_json(const json& j) {
  DatasetConfig d;
  const std::string kind = j.value("kind", "fashion_binary");
  if (kind == "fashion_binary") {
    d.kind = DatasetKind::FashionBinary;
  } else if (kind == "gaussian_noise") {
    d.kind = DatasetKind::GaussianNoise;
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown dataset kind '" + kind + "'");
  }
  d.data_dir = j.value("data_dir", d.data_dir);
  d.class_a = j.value("class_a", d.class_a);
  d.class_b = j.value("class_b", d.class_b);
  d.per_class = j.value("per_class", d.per_class);
  d.validation_per_class = j.value("validation_per_class", d.validation_per_class);
  const std::string labels = j.value("noise_labels", "fashion");
  if (labels == "fashion") {
    d.noise_labels = NoiseLabels::Fashion;
  } else if (labels == "balanced") {
    d.noise_labels = NoiseLabels::Balanced;
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown noise_labels '" + labels + "'");
  }
  d.height = j.value("height", d.height);
  d.width = j.value("width", d.width);
  return d;
}

json config_to_json(const ExperimentConfig& c) {
  json grid = json::array();
  for (auto e : c.resolved_grid()) grid.push_back(e);
  return {{"name", c.name},
          {"dataset", dataset_to_json(c.dataset)},
          {"network", to_json(c.network)},
          {"optimizer", to_json(c.optimizer)},
          {"epochs", c.epochs},
          {"grid_points", c.grid_points},
          {"epoch_grid", grid},
          {"fractions", c.fractions},
          {"permutations", c.permutations},
          {"forest", to_json(c.forest)},
          {"diagnosis", to_json(c.diagnosis)},
          {"master_seed", seed_to_json(c.master_seed)},
          {"output_dir", c.output_dir},
          {"threads", c.threads}};
}

void write_atomic(const fs::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    out << text;
    if (!out) throw Error(ErrorCode::IoError, "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void log(const RunOptions& options, const std::string& msg) {
  if (options.log) options.log(msg);
}

}  // namespace

std::vector<std::int64_t> ExperimentConfig::resolved_grid() const {
  return epoch_grid.empty() ? default_epoch_grid(epochs, grid_points) : epoch_grid;
}

void ExperimentConfig::validate() const {
  auto bad = [](const std::string& what) { return Error(ErrorCode::InvalidConfig, what); };
  if (epochs < 1) throw bad("epochs must be >= 1");
  if (grid_points < 1) throw bad("grid_points must be >= 1");
  const auto grid = resolved_grid();
  if (grid.empty()) throw bad("epoch grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 1 || grid[i] > epochs) throw bad("epoch grid entry outside [1, epochs]");
    if (i > 0 && grid[i] <= grid[i - 1]) throw bad("epoch grid must be strictly increasing");
  }
  if (fractions.empty()) throw bad("no s-validation fractions");
  std::set<double> seen;
  for (double f : fractions) {
    if (!(f >= 0.0 && f <= 1.0)) throw Error(ErrorCode::FractionOutOfRange, "fraction " + std::to_string(f));
    if (!seen.insert(f).second) throw bad("duplicate fraction");
  }
  if (permutations < 1) throw bad("permutations must be >= 1");
  if (threads < 1) throw bad("threads must be >= 1");
  if (dataset.per_class < 1) throw bad("per_class must be >= 1");
  if (dataset.validation_per_class < 1) throw bad("validation_per_class must be >= 1");
  network.validate();
  optimizer.validate();
  forest.validate(network.feature_width());
  const bool balanced_noise = dataset.kind == DatasetKind::GaussianNoise &&
                              dataset.noise_labels == NoiseLabels::Balanced;
  const int h = balanced_noise ? dataset.height : 28;
  const int w = balanced_noise ? dataset.width : 28;
  if (network.input_height != h || network.input_width != w) {
    throw bad(fmt::format("network input {}x{} does not match data {}x{}", network.input_height,
                          network.input_width, h, w));
  }
}

ExperimentConfig config_from_json_text(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");

  ExperimentConfig c;
  try {
    c.name = j.value("name", c.name);
    if (j.contains("dataset")) c.dataset = dataset_from_json(j.at("dataset"));
    if (j.contains("network") && j.contains("preset")) {
      throw Error(ErrorCode::InvalidConfig, "give either 'preset' or 'network', not both");
    }
    if (j.contains("network")) {
      c.network = network_from_json(j.at("network"));
    } else {
      c.network = preset(j.value("preset", "mlp2"));
    }
    if (j.contains("optimizer")) c.optimizer = optimizer_from_json(j.at("optimizer"));
    c.epochs = j.value("epochs", c.epochs);
    c.grid_points = j.value("grid_points", c.grid_points);
    if (j.contains("epoch_grid") && !j.at("epoch_grid").is_null()) {
      c.epoch_grid = j.at("epoch_grid").get<std::vector<std::int64_t>>();
    }
    if (j.contains("fractions")) {
      const auto& f = j.at("fractions");
      c.fractions = f.is_string() && f.get<std::string>() == "standard"
                        ? standard_fraction_suite()
                        : f.get<std::vector<double>>();
    }
    c.permutations = j.value("permutations", c.permutations);
    if (j.contains("forest")) c.forest = forest_from_json(j.at("forest"));
    if (j.contains("diagnosis")) c.diagnosis = thresholds_from_json(j.at("diagnosis"));
    if (j.contains("master_seed")) c.master_seed = seed_from_json(j.at("master_seed"));
    c.output_dir = j.value("output_dir", "runs/" + c.name);
    c.threads = j.value("threads", c.threads);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const fs::path& path) { return config_from_json_text(read_text(path)); }

std::string config_to_json_text(const ExperimentConfig& config) {
  return config_to_json(config).dump(2) + "\n";
}

std::string config_hash(const ExperimentConfig& config) {
  // output_dir, threads and data_dir do not change any number, so a moved directory or
  // a different worker count still resumes.
  json j = config_to_json(config);
  j.erase("output_dir");
  j.erase("threads");
  j["dataset"].erase("data_dir");
  return crc_hex(j.dump());
}

std::string dataset_key(const ExperimentConfig& config) {
  const ExperimentSeeds s = ExperimentSeeds::derive(config.master_seed);
  json dataset = dataset_to_json(config.dataset);
  dataset.erase("data_dir");
  const json j{{"dataset", dataset},
               {"seeds",
                {seed_to_json(s.dataset), seed_to_json(s.validation), seed_to_json(s.noise),
                 seed_to_json(s.validation_noise), seed_to_json(s.perturbation)}}};
  return crc_hex(j.dump());
}

std::vector<std::int64_t> default_epoch_grid(std::int64_t epochs, int points) {
  if (epochs < 1) throw Error(ErrorCode::InvalidConfig, "epochs must be >= 1");
  std::vector<std::int64_t> grid;
  if (points <= 1 || epochs == 1) return {epochs};
  const double top = std::log(static_cast<double>(epochs));
  for (int i = 0; i < points; ++i) {
    const double x = std::exp(top * i / (points - 1));
    const auto e = std::clamp<std::int64_t>(std::llround(x), 1, epochs);
    if (grid.empty() || e > grid.back()) grid.push_back(e);
  }
  grid.back() = epochs;
  return grid;
}

ExperimentSeeds ExperimentSeeds::derive(std::uint64_t m) {
  return {derive_seed(m, Stream::Dataset),      derive_seed(m, Stream::Validation),
          derive_seed(m, Stream::Noise),        derive_seed(m, Stream::ValidationNoise),
          derive_seed(m, Stream::Perturbation), derive_seed(m, Stream::NetworkInit),
          derive_seed(m, Stream::Training)};
}

std::uint64_t ExperimentSeeds::cell(std::uint64_t master_seed, std::int64_t epoch) {
  return derive_seed(master_seed, Stream::Cell, static_cast<std::uint64_t>(epoch));
}

ExperimentData prepare_data(const ExperimentConfig& config) {
  const ExperimentSeeds seeds = ExperimentSeeds::derive(config.master_seed);
  const DatasetConfig& d = config.dataset;
  ExperimentData out;
  if (d.kind == DatasetKind::GaussianNoise && d.noise_labels == NoiseLabels::Balanced) {
    out.data.train = balanced_noise_dataset(d.per_class, static_cast<std::size_t>(d.height),
                                            static_cast<std::size_t>(d.width), seeds.noise);
    out.data.validation =
        balanced_noise_dataset(d.validation_per_class, static_cast<std::size_t>(d.height),
                               static_cast<std::size_t>(d.width), seeds.validation_noise);
  } else {
    const char* env = std::getenv("MEMPROBE_DATA_DIR");
    const fs::path dir = env && *env ? fs::path(env) : fs::path(d.data_dir);
    const IdxData train_pool = load_idx_split(dir, "train");
    const IdxData test_pool = load_idx_split(dir, "t10k");
    ImageDataset train =
        select_binary_subset(train_pool, d.class_a, d.class_b, d.per_class, seeds.dataset);
    out.data = make_validation_split(test_pool, std::move(train), {}, 2 * d.validation_per_class,
                                     seeds.validation);
    if (d.kind == DatasetKind::GaussianNoise) {
      out.data.train = gaussian_noise_like(out.data.train, seeds.noise);
      out.data.validation = gaussian_noise_like(out.data.validation, seeds.validation_noise);
    }
  }
  for (double f : config.fractions) {
    out.s_validation.push_back(make_s_validation(out.data.train, f, seeds.perturbation));
  }
  return out;
}

fs::path StorePaths::checkpoint(std::int64_t epoch) const {
  return checkpoints() / fmt::format("epoch_{:07d}.ckpt", epoch);
}

fs::path StorePaths::cell(std::int64_t epoch, double fraction) const {
  return cells() / fmt::format("epoch_{:07d}_frac_{:.6f}.json", epoch, fraction);
}

std::string cell_to_json_text(const CellResult& c, const std::string& hash) {
  json seeds{{"dataset", seed_to_json(c.seeds.dataset)},
             {"validation", seed_to_json(c.seeds.validation)},
             {"noise", seed_to_json(c.seeds.noise)},
             {"validation_noise", seed_to_json(c.seeds.validation_noise)},
             {"perturbation", seed_to_json(c.seeds.perturbation)},
             {"network_init", seed_to_json(c.seeds.network_init)},
             {"training", seed_to_json(c.seeds.training)},
             {"cell", seed_to_json(c.cell_seed)}};
  json j{{"config_hash", hash},
         {"run", c.run},
         {"epoch", c.epoch},
         {"fraction", c.fraction},
         {"B", c.null.B},
         {"scores", c.null.scores},
         {"observed", c.null.observed},
         {"baseline", c.null.baseline},
         {"forest", to_json(c.null.forest_params)},
         {"validation_accuracy", c.validation_accuracy},
         {"dnn_train_accuracy", c.dnn_train_accuracy},
         {"seeds", seeds}};
  if (c.diagnosis) {
    const auto& d = *c.diagnosis;
    j["diagnosis"] = {{"verdict", to_string(d.verdict)},
                      {"memorized", d.memorized},
                      {"learned", d.learned},
                      {"memorization_evidence", d.memorization_evidence},
                      {"learning_evidence", d.learning_evidence},
                      {"p_value", d.p_value},
                      {"delta_mem", d.thresholds.delta_mem},
                      {"alpha", d.thresholds.alpha}};
  } else {
    j["diagnosis"] = nullptr;
  }
  return j.dump(1) + "\n";
}

CellResult cell_from_json_text(std::string_view text, std::string* hash) {
  try {
    const json j = json::parse(text);
    CellResult c;
    if (hash) *hash = j.at("config_hash").get<std::string>();
    c.run = j.at("run").get<std::string>();
    c.epoch = j.at("epoch").get<std::int64_t>();
    c.fraction = j.at("fraction").get<double>();
    c.null.B = j.at("B").get<int>();
    c.null.scores = j.at("scores").get<std::vector<double>>();
    c.null.observed = j.at("observed").get<double>();
    c.null.baseline = j.at("baseline").get<double>();
    c.null.forest_params = forest_from_json(j.at("forest"));
    c.null.epoch = c.epoch;
    c.null.fraction = c.fraction;
    c.validation_accuracy = j.at("validation_accuracy").get<double>();
    c.dnn_train_accuracy = j.at("dnn_train_accuracy").get<double>();
    const json& s = j.at("seeds");
    c.seeds.dataset = seed_from_json(s.at("dataset"));
    c.seeds.validation = seed_from_json(s.at("validation"));
    c.seeds.noise = seed_from_json(s.at("noise"));
    c.seeds.validation_noise = seed_from_json(s.at("validation_noise"));
    c.seeds.perturbation = seed_from_json(s.at("perturbation"));
    c.seeds.network_init = seed_from_json(s.at("network_init"));
    c.seeds.training = seed_from_json(s.at("training"));
    c.cell_seed = seed_from_json(s.at("cell"));
    c.null.seed = c.cell_seed;
    c.null.forest_params.seed = c.cell_seed;
    if (!j.at("diagnosis").is_null()) {
      const json& d = j.at("diagnosis");
      DiagnosisOutcome o;
      o.verdict = verdict_from_string(d.at("verdict").get<std::string>());
      o.memorized = d.at("memorized").get<bool>();
      o.learned = d.at("learned").get<bool>();
      o.memorization_evidence = d.at("memorization_evidence").get<double>();
      o.learning_evidence = d.at("learning_evidence").get<double>();
      o.p_value = d.at("p_value").get<double>();
      o.thresholds = {d.at("delta_mem").get<double>(), d.at("alpha").get<double>()};
      c.diagnosis = o;
    }
    if (static_cast<int>(c.null.scores.size()) != c.null.B) {
      throw Error(ErrorCode::CorruptStore, "score count differs from B");
    }
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptStore, std::string("cell file: ") + e.what());
  }
}

std::vector<CellResult> evaluate_checkpoint(const ExperimentConfig& config,
                                            const ExperimentData& data, const TrainedNetwork& net,
                                            const std::vector<std::size_t>& fraction_indices) {
  const std::uint64_t cell_seed = ExperimentSeeds::cell(config.master_seed, net.epoch);
  const ImageDataset& train = data.data.train;
  const ImageDataset& validation = data.data.validation;

  PermutationProbe probe(extract_features(net, train.as_matrix()), train.labels, config.forest,
                         cell_seed);
  const double validation_accuracy =
      probe.observed_score(extract_features(net, validation.as_matrix()), validation.labels);
  const double dnn_train_accuracy = network_accuracy(net, train);
  const double baseline = baseline_guess(train.labels);

  std::vector<Eigen::MatrixXd> sval_features;
  sval_features.reserve(fraction_indices.size());
  for (std::size_t idx : fraction_indices) {
    sval_features.push_back(extract_features(net, data.s_validation.at(idx).images.as_matrix()));
  }
  std::vector<const Eigen::MatrixXd*> targets;
  for (const auto& f : sval_features) targets.push_back(&f);
  const auto nulls = probe.null_scores(targets, config.permutations, config.threads);

  std::vector<CellResult> out;
  for (std::size_t t = 0; t < fraction_indices.size(); ++t) {
    CellResult c;
    c.run = config.name;
    c.epoch = net.epoch;
    c.fraction = config.fractions[fraction_indices[t]];
    c.null.scores = nulls[t];
    c.null.observed = probe.observed_score(sval_features[t]);
    c.null.baseline = baseline;
    c.null.B = config.permutations;
    c.null.epoch = net.epoch;
    c.null.fraction = c.fraction;
    c.null.forest_params = config.forest;
    c.null.forest_params.seed = cell_seed;
    c.null.seed = cell_seed;
    if (c.null.B >= kMinPermutationsForDiagnosis) {
      c.diagnosis = classify_outcome(c.null, config.diagnosis);
    }
    c.validation_accuracy = validation_accuracy;
    c.dnn_train_accuracy = dnn_train_accuracy;
    c.seeds = ExperimentSeeds::derive(config.master_seed);
    c.cell_seed = cell_seed;
    out.push_back(std::move(c));
  }
  return out;
}

ExperimentConfig open_store(const fs::path& output_dir) {
  const StorePaths store{output_dir};
  if (!fs::exists(store.manifest()) || !fs::exists(store.config())) {
    throw Error(ErrorCode::CorruptStore, output_dir.string() + " holds no experiment");
  }
  std::string expected;
  try {
    expected = json::parse(read_text(store.manifest())).at("config_hash").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptStore, std::string("manifest: ") + e.what());
  }
  ExperimentConfig config;
  try {
    config = load_config(store.config());
  } catch (const Error& e) {
    throw Error(ErrorCode::CorruptStore, std::string("config echo: ") + e.what());
  }
  const std::string actual = config_hash(config);
  if (actual != expected) {
    throw Error(ErrorCode::CorruptStore,
                "config hash " + actual + " differs from the recorded " + expected);
  }
  return config;
}

std::vector<CellResult> load_cells(const fs::path& output_dir) {
  const ExperimentConfig config = open_store(output_dir);
  const std::string hash = config_hash(config);
  const StorePaths store{output_dir};
  std::vector<CellResult> cells;
  if (!fs::exists(store.cells())) return cells;
  for (const auto& entry : fs::directory_iterator(store.cells())) {
    if (entry.path().extension() != ".json") continue;
    std::string cell_hash;
    CellResult c = cell_from_json_text(read_text(entry.path()), &cell_hash);
    if (cell_hash != hash) {
      throw Error(ErrorCode::CorruptStore, entry.path().string() + " belongs to another config");
    }
    cells.push_back(std::move(c));
  }
  std::sort(cells.begin(), cells.end(), [](const CellResult& a, const CellResult& b) {
    return std::tie(a.epoch, a.fraction) < std::tie(b.epoch, b.fraction);
  });
  return cells;
}

namespace {

std::vector<CellResult> complete_store(const ExperimentConfig& config, const StorePaths& store,
                                       const RunOptions& options) {
  const std::string hash = config_hash(config);
  const ExperimentSeeds seeds = ExperimentSeeds::derive(config.master_seed);
  const auto grid = config.resolved_grid();

  // Missing work per grid epoch.
  std::map<std::int64_t, std::vector<std::size_t>> missing_cells;
  std::set<std::int64_t> missing_checkpoints;
  for (auto e : grid) {
    if (!fs::exists(store.checkpoint(e))) missing_checkpoints.insert(e);
    if (!options.compute_cells) continue;
    for (std::size_t f = 0; f < config.fractions.size(); ++f) {
      if (!fs::exists(store.cell(e, config.fractions[f]))) missing_cells[e].push_back(f);
    }
  }
  std::int64_t last_needed = 0;
  for (const auto& [e, _] : missing_cells) {
    if (missing_checkpoints.contains(e)) last_needed = std::max(last_needed, e);
  }
  if (!options.compute_cells && !missing_checkpoints.empty()) {
    last_needed = *missing_checkpoints.rbegin();
  }

  std::optional<ExperimentData> data;
  auto ensure_data = [&]() -> const ExperimentData& {
    if (!data) {
      log(options, "preparing data");
      data = prepare_data(config);
    }
    return *data;
  };
  auto evaluate = [&](const TrainedNetwork& net) {
    const auto it = missing_cells.find(net.epoch);
    if (it == missing_cells.end()) return;
    log(options, fmt::format("epoch {}: probing {} fraction(s)", net.epoch, it->second.size()));
    for (const auto& cell : evaluate_checkpoint(config, ensure_data(), net, it->second)) {
      write_atomic(store.cell(cell.epoch, cell.fraction), cell_to_json_text(cell, hash));
    }
    missing_cells.erase(it);
  };
  auto load_net = [&](std::int64_t epoch) {
    LoadedCheckpoint ck = load_checkpoint(store.checkpoint(epoch));
    if (ck.tag != hash || ck.net.epoch != epoch) {
      throw Error(ErrorCode::CorruptStore,
                  store.checkpoint(epoch).string() + " does not belong to this experiment");
    }
    return std::move(ck.net);
  };

  // Cells whose checkpoint is already on disk.
  for (auto e : grid) {
    if (missing_cells.contains(e) && !missing_checkpoints.contains(e)) evaluate(load_net(e));
  }

  if (last_needed > 0) {
    TrainedNetwork start = init_network(config.network, seeds.network_init);
    for (auto it = grid.rbegin(); it != grid.rend(); ++it) {
      if (*it < last_needed && !missing_checkpoints.contains(*it) && *it > start.epoch) {
        const std::int64_t first_gap = *missing_checkpoints.begin();
        if (*it < first_gap) {
          start = load_net(*it);
          break;
        }
      }
    }
    std::vector<std::int64_t> wanted;
    for (auto e : grid) {
      if (e > start.epoch && e <= last_needed) wanted.push_back(e);
    }
    log(options, fmt::format("training {} from epoch {} to {}",
                             config.network.preset_name.empty() ? "network"
                                                                : config.network.preset_name,
                             start.epoch, last_needed));
    const auto& d = ensure_data();
    train(std::move(start), d.data.train, config.optimizer, last_needed, wanted, seeds.training,
          [&](const TrainedNetwork& net) {
            if (missing_checkpoints.contains(net.epoch)) {
              save_checkpoint(store.checkpoint(net.epoch), net, hash);
              missing_checkpoints.erase(net.epoch);
            }
            evaluate(net);
          });
  }
  return load_cells(store.root);
}

}  // namespace

std::vector<CellResult> run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const StorePaths store{config.output_dir};
  const std::string hash = config_hash(config);
  if (fs::exists(store.manifest())) {
    std::string existing;
    try {
      existing = json::parse(read_text(store.manifest())).at("config_hash").get<std::string>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::CorruptStore, std::string("manifest: ") + e.what());
    }
    if (existing != hash) {
      throw Error(ErrorCode::CorruptStore,
                  store.root.string() + " holds a different experiment (hash " + existing + ")");
    }
  }
  fs::create_directories(store.root);
  fs::remove_all(store.cells());
  fs::remove_all(store.checkpoints());
  for (auto p : {store.results_csv(), store.summary_json(), store.panel_svg()}) fs::remove(p);
  fs::create_directories(store.cells());
  fs::create_directories(store.checkpoints());
  write_atomic(store.config(), config_to_json_text(config));
  write_atomic(store.manifest(), json{{"config_hash", hash}, {"format", 1}}.dump(2) + "\n");
  return complete_store(config, store, options);
}

std::vector<CellResult> resume(const fs::path& output_dir, const RunOptions& options) {
  const ExperimentConfig config = open_store(output_dir);
  const StorePaths store{output_dir};
  fs::create_directories(store.cells());
  fs::create_directories(store.checkpoints());
  return complete_store(config, store, options);
}

}  // namespace memprobe
