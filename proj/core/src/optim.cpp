#include "hqml/optim.hpp"

#include <cmath>
#include <string>

#include "hqml/error.hpp"

namespace hqml::nn {

namespace {

void check_grads(const ParamSet& params, std::span<const diff::Tensor> grads) {
  if (grads.size() != params.size()) {
    fail(ErrorKind::Shape, "optimizer got " + std::to_string(grads.size()) + " gradients for " +
                               std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].shape() != params.at(i).shape()) {
      fail(ErrorKind::Shape, "gradient for '" + params.name(i) + "' has shape " +
                                 grads[i].shape_string());
    }
    if (!grads[i].all_finite()) {
      fail(ErrorKind::Divergence, "non-finite gradient for '" + params.name(i) + "'");
    }
  }
}

void ensure_slots(std::vector<diff::Tensor>& slots, const ParamSet& params) {
  if (slots.size() == params.size()) return;
  slots.clear();
  for (std::size_t i = 0; i < params.size(); ++i) slots.emplace_back(params.at(i).shape(), 0.0);
}

}  // namespace

std::string_view to_string(OptimizerKind kind) noexcept {
  switch (kind) {
    case OptimizerKind::Sgd: return "sgd";
    case OptimizerKind::Adam: return "adam";
    case OptimizerKind::Adagrad: return "adagrad";
  }
  return "?";
}

OptimizerKind optimizer_from_string(std::string_view name) {
  if (name == "sgd") return OptimizerKind::Sgd;
  if (name == "adam") return OptimizerKind::Adam;
  if (name == "adagrad") return OptimizerKind::Adagrad;
  fail(ErrorKind::Config, "unknown optimizer '" + std::string(name) + "'");
}

void sgd_step(ParamSet& params, std::span<const diff::Tensor> grads, OptimizerState& state,
              double lr) {
  check_grads(params, grads);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params.at(i).data();
    for (std::size_t k = 0; k < p.size(); ++k) p[k] -= lr * grads[i][k];
  }
  ++state.step;
}

void adam_step(ParamSet& params, std::span<const diff::Tensor> grads, OptimizerState& state,
               double lr) {
  check_grads(params, grads);
  ensure_slots(state.first, params);
  ensure_slots(state.second, params);
  ++state.step;
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params.at(i).data();
    auto m = state.first[i].data();
    auto v = state.second[i].data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double g = grads[i][k];
      m[k] = kAdamBeta1 * m[k] + (1.0 - kAdamBeta1) * g;
      v[k] = kAdamBeta2 * v[k] + (1.0 - kAdamBeta2) * g * g;
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      p[k] -= lr * m_hat / (std::sqrt(v_hat) + kAdamEpsilon);
    }
  }
}

void adagrad_step(ParamSet& params, std::span<const diff::Tensor> grads, OptimizerState& state,
                  double lr) {
  check_grads(params, grads);
  ensure_slots(state.first, params);
  ++state.step;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params.at(i).data();
    auto acc = state.first[i].data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double g = grads[i][k];
      acc[k] += g * g;
      p[k] -= lr * g / (std::sqrt(acc[k]) + kAdagradEpsilon);
    }
  }
}

void Optimizer::step(ParamSet& params, std::span<const diff::Tensor> grads) {
  switch (kind_) {
    case OptimizerKind::Sgd: sgd_step(params, grads, state_, lr_); break;
    case OptimizerKind::Adam: adam_step(params, grads, state_, lr_); break;
    case OptimizerKind::Adagrad: adagrad_step(params, grads, state_, lr_); break;
  }
}

}  // namespace hqml::nn
