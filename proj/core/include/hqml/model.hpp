#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hqml/diff.hpp"
#include "hqml/params.hpp"

namespace hqml {

/// One training example. Sequence models read `tokens`, feature models read
/// `features`.
struct Sample {
  std::vector<std::size_t> tokens;
  std::vector<double> features;
  std::size_t label = 0;
};

using Dataset = std::vector<Sample>;

/// A classifier whose logits are a differentiable function of its ParamSet.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::string kind() const = 0;
  virtual std::size_t n_classes() const = 0;
  virtual ParamSet& params() = 0;
  virtual const ParamSet& params() const = 0;

  /// Logits for one sample, built on `tape` from the bound parameters.
  virtual diff::Var logits(diff::Tape& tape, const Bound& bound, const Sample& sample) const = 0;

  /// Shape description echoed into checkpoints.
  virtual nlohmann::json topology() const = 0;
};

/// Runs the model without recording gradients and returns the logits.
std::vector<double> predict_logits(const Model& model, const Sample& sample);
std::size_t predict(const Model& model, const Sample& sample);

}  // namespace hqml
