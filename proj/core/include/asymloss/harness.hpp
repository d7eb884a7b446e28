#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "asymloss/core.hpp"
#include "asymloss/losses.hpp"
#include "asymloss/noise.hpp"
#include "asymloss/trainer.hpp"

namespace asymloss {

std::string version_string();

struct DatasetConfig {
  std::string kind = "gaussians";  // gaussians | rings | idx | file
  std::size_t n_train = 4000;
  std::size_t n_test = 1000;
  std::size_t num_classes = 4;
  std::size_t feature_dim = 2;
  double separation = 4.0;
  std::uint64_t seed = 1;
  // idx: train_images/train_labels/test_images/test_labels; file: train/test JSON datasets.
  std::string train_images, train_labels, test_images, test_labels;
  std::string train_file, test_file;
};

/// One training run. JSON schema (every field optional, defaults shown by
/// the struct initializers):
///
///   {
///     "dataset": {"kind": "gaussians", "n_train": 4000, "n_test": 1000,
///                 "num_classes": 4, "feature_dim": 2, "separation": 4.0, "seed": 1},
///     "noise":   {"kind": "symmetric", "eta": 0.4},
///     "loss":    {"kind": "jal_ce", "params": {"alpha": 1, "beta": 1, "a": 10}},
///     "mlp":     {"hidden": [32, 32]},
///     "opt":     {"lr": 0.01, "momentum": 0.9, "weight_decay": 5e-5,
///                 "decay": "l1", "epochs": 100, "batch_size": 128},
///     "seed": 0,
///     "outputs": "runs",
///     "histogram_epochs": [10, 50]
///   }
///
/// "seed" drives noise injection and, unless opt.seed is given, training.
struct ExperimentConfig {
  DatasetConfig dataset;
  NoiseSpec noise;
  LossSpec loss;
  MlpConfig mlp;
  OptConfig opt;
  std::uint64_t seed = 0;
  std::string outputs = "runs";
  std::vector<std::size_t> histogram_epochs;
  // Exact text the config was parsed from; written verbatim as config.json.
  std::string source_text;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig config_from_text(const std::string& text);
nlohmann::json to_json(const ExperimentConfig& config);

/// content hash (FNV-1a, 64-bit, hex) of the canonical config JSON, seed included.
std::string run_id(const ExperimentConfig& config);

struct RunRecord {
  std::string run_id;
  nlohmann::json config;  // canonical form
  std::string config_text;
  std::string loss_name;
  NoiseSpec noise;
  nlohmann::json dataset;  // dataset section, used to pair runs
  TrainReport train;
  TransitionReport transition;
  double duration_s = 0.0;
  std::string version;
};

/// Builds the train/test split the config describes (clean labels).
std::pair<Dataset, Dataset> build_datasets(const DatasetConfig& config);

/// data -> noise -> train -> persist. Writes
///   <outputs>/<run-id>/{config.json, metrics.csv, histograms.json,
///                       transition.json, record.json}
/// when `persist` is set. Stage failures raise Error with the stage named in
/// the message; the run directory is removed.
RunRecord run_experiment(const ExperimentConfig& config, bool persist = true);

nlohmann::json to_json(const RunRecord& record);
RunRecord record_from_json(const nlohmann::json& j);
RunRecord load_run_record(const std::filesystem::path& record_path);
std::string metrics_csv(const TrainReport& report);

struct ComparisonRow {
  std::string noise_kind;
  double noise_rate = 0.0;
  std::string loss;
  std::size_t runs = 0;
  double mean_acc = 0.0;
  double std_acc = 0.0;  // sample std over runs; 0 for a single run
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;

  std::string csv() const;
  std::string text() const;  // aligned columns, "mean±std" in percent
};

/// Groups records by (noise kind, rate, loss) and reports last-epoch test
/// accuracy. Rows are sorted by noise rate, then kind, then loss name. All
/// records must describe the same dataset.
ComparisonTable compare_runs(const std::vector<RunRecord>& records);

}  // namespace asymloss
