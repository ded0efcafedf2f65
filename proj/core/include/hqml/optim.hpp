#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hqml/params.hpp"

namespace hqml::nn {

enum class OptimizerKind { Sgd, Adam, Adagrad };

std::string_view to_string(OptimizerKind kind) noexcept;
OptimizerKind optimizer_from_string(std::string_view name);

/// Per-tensor optimizer state. Adagrad keeps the squared-gradient sum in
/// `first`; Adam keeps both moments; SGD keeps nothing.
struct OptimizerState {
  std::vector<diff::Tensor> first;
  std::vector<diff::Tensor> second;
  long step = 0;
};

inline constexpr double kAdagradEpsilon = 1e-10;
inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

// All three throw Divergence if any gradient is non-finite; params are left
// untouched in that case.
void sgd_step(ParamSet& params, std::span<const diff::Tensor> grads, OptimizerState& state,
              double lr);
void adam_step(ParamSet& params, std::span<const diff::Tensor> grads, OptimizerState& state,
               double lr);
void adagrad_step(ParamSet& params, std::span<const diff::Tensor> grads, OptimizerState& state,
                  double lr);

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double lr) : kind_(kind), lr_(lr) {}

  void step(ParamSet& params, std::span<const diff::Tensor> grads);

  OptimizerKind kind() const noexcept { return kind_; }
  double learning_rate() const noexcept { return lr_; }
  const OptimizerState& state() const noexcept { return state_; }

 private:
  OptimizerKind kind_;
  double lr_;
  OptimizerState state_;
};

}  // namespace hqml::nn
