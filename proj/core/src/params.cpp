#include "hqml/params.hpp"

#include <cmath>

#include "hqml/error.hpp"

namespace hqml {

std::size_t ParamSet::add(std::string name, diff::Tensor init) {
  for (const auto& n : names_) {
    if (n == name) fail(ErrorKind::Config, "duplicate parameter name '" + name + "'");
  }
  names_.push_back(std::move(name));
  tensors_.push_back(std::move(init));
  return tensors_.size() - 1;
}

std::size_t ParamSet::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  fail(ErrorKind::Config, "no parameter named '" + name + "'");
}

Bound ParamSet::bind(diff::Tape& tape) const {
  Bound bound;
  bound.reserve(tensors_.size());
  for (const auto& t : tensors_) bound.push_back(tape.leaf(t));
  return bound;
}

std::vector<diff::Tensor> ParamSet::gradients(const diff::Tape& tape, const Bound& bound) const {
  std::vector<diff::Tensor> grads;
  grads.reserve(bound.size());
  for (auto v : bound) grads.push_back(tape.grad(v));
  return grads;
}

std::size_t ParamSet::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

diff::Tensor uniform_init(std::vector<std::size_t> shape, std::size_t fan_in, Rng& rng) {
  diff::Tensor t(std::move(shape), 0.0);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (auto& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

}  // namespace hqml
