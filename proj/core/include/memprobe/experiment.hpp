#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "memprobe/dataset.hpp"
#include "memprobe/diagnosis.hpp"
#include "memprobe/forest.hpp"
#include "memprobe/network.hpp"
#include "memprobe/perm_null.hpp"
#include "memprobe/perturbation.hpp"

namespace memprobe {

enum class DatasetKind { FashionBinary, GaussianNoise };

/// Where the labels of a noise run come from: the Fashion-MNIST subset the
/// noise replaces, or a synthetic balanced vector (no image files needed).
enum class NoiseLabels { Fashion, Balanced };

struct DatasetConfig {
  DatasetKind kind = DatasetKind::FashionBinary;
  std::string data_dir = "data/fashion-mnist";
  int class_a = 2;  // pullover
  int class_b = 4;  // coat
  std::size_t per_class = 1000;
  std::size_t validation_per_class = 1000;
  NoiseLabels noise_labels = NoiseLabels::Fashion;
  int height = 28;  // balanced-noise only
  int width = 28;
  bool operator==(const DatasetConfig&) const = default;
};

struct ExperimentConfig {
  std::string name = "experiment";
  DatasetConfig dataset;
  NetworkSpec network = preset("mlp2");
  OptimizerSpec optimizer = OptimizerSpec::sgd();
  std::int64_t epochs = 2000;
  int grid_points = 20;
  std::vector<std::int64_t> epoch_grid;  // empty: default_epoch_grid(epochs, grid_points)
  std::vector<double> fractions = {0.05, 0.10, 1.00};
  int permutations = 100;
  ForestParams forest;
  DiagnosisThresholds diagnosis;
  std::uint64_t master_seed = 0;
  std::string output_dir = "runs/experiment";
  int threads = 1;

  /// epoch_grid, or the default grid when none was given.
  std::vector<std::int64_t> resolved_grid() const;
  void validate() const;
};

/// Reads a JSON config; absent fields keep their defaults.
ExperimentConfig config_from_json_text(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON with every field (defaults included) spelled out.
std::string config_to_json_text(const ExperimentConfig& config);

/// CRC-32 of the canonical JSON, as 8 hex digits.
std::string config_hash(const ExperimentConfig& config);

/// Identifies the training/s-validation data an experiment sees; two runs are
/// comparable exactly when their keys agree.
std::string dataset_key(const ExperimentConfig& config);

/// About `points` log-spaced integers from 1 to epochs inclusive, deduplicated.
std::vector<std::int64_t> default_epoch_grid(std::int64_t epochs, int points = 20);

/// Every sub-seed of an experiment, derived from the master seed.
struct ExperimentSeeds {
  std::uint64_t dataset = 0;
  std::uint64_t validation = 0;
  std::uint64_t noise = 0;
  std::uint64_t validation_noise = 0;
  std::uint64_t perturbation = 0;
  std::uint64_t network_init = 0;
  std::uint64_t training = 0;

  static ExperimentSeeds derive(std::uint64_t master_seed);
  /// Probe seed for the cell(s) at `epoch`; shared by all fractions.
  static std::uint64_t cell(std::uint64_t master_seed, std::int64_t epoch);
};

struct CellResult {
  std::string run;
  std::int64_t epoch = 0;
  double fraction = 0.0;
  NullDistribution null;
  std::optional<DiagnosisOutcome> diagnosis;  // absent when B is too small
  double validation_accuracy = 0.0;
  double dnn_train_accuracy = 0.0;
  ExperimentSeeds seeds;
  std::uint64_t cell_seed = 0;
};

/// Train/validation data and the s-validation sets of an experiment.
struct ExperimentData {
  DatasetPair data;
  std::vector<SValidationSet> s_validation;  // one per config fraction
};

ExperimentData prepare_data(const ExperimentConfig& config);

using ProgressLog = std::function<void(std::string_view)>;

struct RunOptions {
  /// false: stop once the checkpoints are persisted (resume fills the cells).
  bool compute_cells = true;
  ProgressLog log;
};

/// Runs the whole pipeline into config.output_dir, replacing previous results
/// of the same config. Throws CorruptStore when the directory holds a
/// different experiment.
std::vector<CellResult> run_experiment(const ExperimentConfig& config,
                                       const RunOptions& options = {});

/// Completes an interrupted run: computes only the cells that are missing,
/// training further only when a needed checkpoint is absent.
std::vector<CellResult> resume(const std::filesystem::path& output_dir,
                               const RunOptions& options = {});

/// Probe one checkpoint: features, observed scores, nulls and diagnoses for
/// the requested fractions (indices into config.fractions).
std::vector<CellResult> evaluate_checkpoint(const ExperimentConfig& config,
                                            const ExperimentData& data,
                                            const TrainedNetwork& net,
                                            const std::vector<std::size_t>& fraction_indices);

/// Layout of an output directory.
struct StorePaths {
  std::filesystem::path root;

  std::filesystem::path config() const { return root / "config.json"; }
  std::filesystem::path manifest() const { return root / "store.json"; }
  std::filesystem::path checkpoints() const { return root / "checkpoints"; }
  std::filesystem::path cells() const { return root / "cells"; }
  std::filesystem::path checkpoint(std::int64_t epoch) const;
  std::filesystem::path cell(std::int64_t epoch, double fraction) const;
  std::filesystem::path results_csv() const { return root / "results.csv"; }
  std::filesystem::path summary_json() const { return root / "summary.json"; }
  std::filesystem::path panel_svg() const { return root / "panel.svg"; }
};

/// Reads config.json and checks it against the manifest hash.
ExperimentConfig open_store(const std::filesystem::path& output_dir);

/// All persisted cells, sorted by (epoch, fraction).
std::vector<CellResult> load_cells(const std::filesystem::path& output_dir);

std::string cell_to_json_text(const CellResult& cell, const std::string& config_hash);
CellResult cell_from_json_text(std::string_view text, std::string* config_hash = nullptr);

}  // namespace memprobe
