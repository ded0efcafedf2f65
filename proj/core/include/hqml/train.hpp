#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hqml/model.hpp"
#include "hqml/optim.hpp"

namespace hqml {

struct TrainConfig {
  int epochs = 10;
  double lr = 0.01;
  std::size_t batch_size = 32;
  nn::OptimizerKind optimizer = nn::OptimizerKind::Adam;
  /// Validation metrics are logged on epochs divisible by this.
  int eval_interval = 1;
  std::uint64_t seed = 0;
  /// When false, the wall_time column is left empty so logs stay reproducible.
  bool record_wall_time = false;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> val_loss;
  std::optional<double> val_accuracy;
  std::optional<double> wall_time_s;
};

struct TrainLog {
  std::vector<EpochMetrics> epochs;
  bool diverged = false;
  std::string failure;
};

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Mean cross-entropy and exact-match argmax accuracy over `data`.
Evaluation evaluate(const Model& model, const Dataset& data);

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Shuffled mini-batch training with softmax cross-entropy. Train metrics are
/// measured on the full training set after each epoch. A non-finite loss or
/// gradient stops training and returns the partial log with diverged = true.
TrainLog train_model(Model& model, const Dataset& train, const Dataset* validation,
                     const TrainConfig& config, const EpochCallback& on_epoch = {});

}  // namespace hqml
