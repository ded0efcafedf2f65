#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hqml/diff.hpp"
#include "hqml/rng.hpp"
#include "hqml/tensor.hpp"

namespace hqml {

/// Leaves bound onto a tape, one per ParamSet entry, in insertion order.
using Bound = std::vector<diff::Var>;

/// Ordered, named trainable tensors owned by a model.
class ParamSet {
 public:
  /// Returns the index of the new entry. Names must be unique.
  std::size_t add(std::string name, diff::Tensor init);

  std::size_t size() const noexcept { return tensors_.size(); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  diff::Tensor& at(std::size_t i) { return tensors_.at(i); }
  const diff::Tensor& at(std::size_t i) const { return tensors_.at(i); }

  /// Config error when absent.
  std::size_t index_of(const std::string& name) const;

  Bound bind(diff::Tape& tape) const;
  std::vector<diff::Tensor> gradients(const diff::Tape& tape, const Bound& bound) const;

  std::size_t scalar_count() const noexcept;

 private:
  std::vector<std::string> names_;
  std::vector<diff::Tensor> tensors_;
};

/// Uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
diff::Tensor uniform_init(std::vector<std::size_t> shape, std::size_t fan_in, Rng& rng);

}  // namespace hqml
