#include "hqml/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "hqml/error.hpp"
#include "hqml/rng.hpp"

namespace hqml {

Evaluation evaluate(const Model& model, const Dataset& data) {
  if (data.empty()) fail(ErrorKind::Input, "cannot evaluate on an empty dataset");
  double loss = 0.0;
  std::size_t correct = 0;
  for (const auto& sample : data) {
    diff::Tape tape;
    const Bound bound = model.params().bind(tape);
    const auto logits = model.logits(tape, bound, sample);
    const std::vector<double> lv = tape.value(logits).values();
    loss += tape.value(diff::softmax_xent(tape, logits, sample.label))[0];
    const auto best = static_cast<std::size_t>(std::max_element(lv.begin(), lv.end()) - lv.begin());
    if (best == sample.label) ++correct;
  }
  const auto n = static_cast<double>(data.size());
  return {loss / n, static_cast<double>(correct) / n};
}

TrainLog train_model(Model& model, const Dataset& train, const Dataset* validation,
                     const TrainConfig& config, const EpochCallback& on_epoch) {
  if (config.epochs < 0) fail(ErrorKind::Config, "epochs must be non-negative");
  if (config.batch_size == 0) fail(ErrorKind::Config, "batch_size must be positive");
  if (!(config.lr > 0.0)) fail(ErrorKind::Config, "learning rate must be positive");
  if (config.eval_interval < 1) fail(ErrorKind::Config, "eval_interval must be positive");
  TrainLog log;
  if (config.epochs == 0) return log;
  if (train.empty()) fail(ErrorKind::Input, "training set is empty");

  nn::Optimizer optimizer(config.optimizer, config.lr);
  Rng shuffle_rng(config.seed, Stream::Shuffle);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto started = std::chrono::steady_clock::now();

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(order.begin(), order.end());
    try {
      for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
        const std::size_t end = std::min(order.size(), begin + config.batch_size);
        diff::Tape tape;
        const Bound bound = model.params().bind(tape);
        std::vector<diff::Var> losses;
        losses.reserve(end - begin);
        for (std::size_t k = begin; k < end; ++k) {
          const Sample& s = train[order[k]];
          losses.push_back(diff::softmax_xent(tape, model.logits(tape, bound, s), s.label));
        }
        const auto loss = diff::scale(tape, diff::add_n(tape, losses),
                                      1.0 / static_cast<double>(end - begin));
        if (!std::isfinite(tape.value(loss)[0])) {
          fail(ErrorKind::Divergence, "non-finite loss in epoch " + std::to_string(epoch));
        }
        tape.backward(loss);
        optimizer.step(model.params(), model.params().gradients(tape, bound));
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Divergence) throw;
      log.diverged = true;
      log.failure = e.what();
      return log;
    }

    EpochMetrics m;
    m.epoch = epoch;
    const auto tr = evaluate(model, train);
    m.train_loss = tr.loss;
    m.train_accuracy = tr.accuracy;
    if (validation && !validation->empty() && epoch % config.eval_interval == 0) {
      const auto va = evaluate(model, *validation);
      m.val_loss = va.loss;
      m.val_accuracy = va.accuracy;
    }
    if (config.record_wall_time) {
      m.wall_time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    }
    if (!std::isfinite(m.train_loss) || (m.val_loss && !std::isfinite(*m.val_loss))) {
      log.diverged = true;
      log.failure = "non-finite evaluation loss in epoch " + std::to_string(epoch);
      return log;
    }
    log.epochs.push_back(m);
    if (on_epoch) on_epoch(m);
  }
  return log;
}

}  // namespace hqml
