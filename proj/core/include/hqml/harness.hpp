#pragma once

// Experiment orchestration: resolved configs, dataset assembly for the retro
// and Trojan tasks, seeded training, and run-directory persistence.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hqml/features.hpp"
#include "hqml/model.hpp"
#include "hqml/optim.hpp"
#include "hqml/train.hpp"

namespace hqml::harness {

inline constexpr int kConfigSchemaVersion = 1;

enum class Task { RetroSingle, RetroChain, TrojanQnn, TrojanClassicalNn, TrojanBaselines };

std::string_view to_string(Task task) noexcept;
Task task_from_string(std::string_view name);
bool is_trojan(Task task) noexcept;

struct RetroOptions {
  std::size_t subset_size = 9;
  int reaction_type = 1;
  /// Share of the selected samples used for training (the rest validate).
  double train_ratio = 1.0;
};

struct TrojanOptions {
  /// "tsne" reduces to two features; "none" keeps the raw columns.
  std::string reduction = "tsne";
  /// Above the TI:TF replication multiplicity (40), so replicated rows have
  /// neighbours beyond their own copies.
  double perplexity = 50.0;
  int tsne_iters = 1000;
  features::SplitRatios split;
  /// Used when `data` is empty.
  features::SynthParams synth;
};

struct ExperimentConfig {
  Task task = Task::TrojanQnn;
  std::string model = "qnn";
  std::uint64_t seed = 0;

  int epochs = 10;
  double lr = 0.4;
  std::size_t batch_size = 32;
  nn::OptimizerKind optimizer = nn::OptimizerKind::Adagrad;
  int eval_interval = 1;

  std::size_t embed_dim = 8;
  std::size_t hidden_dim = 6;
  int qubits = 2;
  int layers = 2;

  /// Corpus or feature CSV. Empty selects the bundled corpus (retro tasks) or
  /// the synthetic generator (Trojan tasks).
  std::string data;

  RetroOptions retro;
  TrojanOptions trojan;

  bool record_wall_time = false;
};

/// Hyperparameter defaults for a task/model pair. Config error when the model
/// does not belong to the task.
ExperimentConfig default_config(Task task, const std::string& model);

/// Config error naming the first offending field.
void validate(const ExperimentConfig& config);

nlohmann::json to_json(const ExperimentConfig& config);
/// Starts from default_config(task, model) and applies every present key.
/// Unknown keys and a schema_version other than 1 are Config errors.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig read_config(const std::filesystem::path& path);

/// Directory holding the bundled corpora.
std::filesystem::path bundled_data_dir();

// ---- Data assembly -------------------------------------------------------------

struct RetroData {
  Dataset train;
  Dataset validation;
  std::size_t vocab_size = 0;
  std::size_t n_classes = 0;
  std::vector<std::string> warnings;
};

RetroData prepare_retro_data(const ExperimentConfig& config);

struct TrojanData {
  features::Split split;
  std::size_t raw_rows = 0;
  std::size_t balanced_rows = 0;
  std::vector<std::string> warnings;
};

/// Load or generate, balance, reduce, normalise, split.
TrojanData prepare_trojan_data(const ExperimentConfig& config);

// ---- Runs ----------------------------------------------------------------------

struct RunResult {
  std::filesystem::path dir;  // empty when nothing was persisted
  TrainLog log;
  std::optional<double> test_accuracy;
  nlohmann::json summary;
};

using Progress = std::function<void(const std::string&)>;

/// Runs the full pipeline and writes runs_root/<timestamp>-<task>-<model>/
/// with config.json, metrics.csv, checkpoint.json and summary.json.
/// `prepared` skips Trojan data assembly when the caller already has it.
RunResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& runs_root,
                         const Progress& progress = {}, const TrojanData* prepared = nullptr);

/// Same pipeline without touching the filesystem.
RunResult run_in_memory(const ExperimentConfig& config, const Progress& progress = {},
                        const TrojanData* prepared = nullptr);

/// metrics.csv body for a log, header included.
std::string metrics_csv(const TrainLog& log);

struct ComparisonRow {
  std::string model;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

/// Trains each config on one shared Trojan dataset and returns rows sorted by
/// ascending test accuracy. Comparability error unless every config is a
/// Trojan task with the same data source, preprocessing and seed.
std::vector<ComparisonRow> compare_models(const std::vector<ExperimentConfig>& configs,
                                          const Progress& progress = {});

/// Reshapes run_dir/metrics.csv into run_dir/plot_data.csv with columns
/// series,epoch,metric,value sorted by (series, epoch, metric). Returns the
/// written path. Io error when metrics.csv is missing.
std::filesystem::path emit_plot_data(const std::filesystem::path& run_dir);

}  // namespace hqml::harness
