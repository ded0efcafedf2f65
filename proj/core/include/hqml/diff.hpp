#pragma once

// Reverse-mode differentiation over Tensor values. A Tape is built fresh for
// every training step: parameters enter as leaves, operations append nodes
// with increasing ids, and backward() sweeps the ids in reverse once.

#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "hqml/qsim.hpp"
#include "hqml/tensor.hpp"

namespace hqml::diff {

struct Var {
  static constexpr std::size_t kInvalid = std::numeric_limits<std::size_t>::max();
  std::size_t id = kInvalid;

  bool valid() const noexcept { return id != kInvalid; }
};

class Tape {
 public:
  /// Accumulates into the gradients of a node's inputs, given the node id.
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  Var leaf(Tensor value);
  Var constant(Tensor value);

  /// Appends an interior node. `fn` may be empty for nodes without inputs.
  Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn fn);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  std::span<const std::size_t> inputs(std::size_t id) const { return nodes_.at(id).inputs; }

  /// Gradient of the last backward() loss with respect to v. Zero for nodes
  /// with no path to the loss.
  const Tensor& grad(Var v) const;
  Tensor& grad_mut(std::size_t id) { return grads_.at(id); }

  bool is_leaf(Var v) const { return nodes_.at(v.id).is_leaf; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Requires a single-element loss (Shape error otherwise).
  void backward(Var loss);

  /// Number of node backward functions executed by the last backward().
  std::size_t visited() const noexcept { return visited_; }

 private:
  struct Node {
    Tensor value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool is_leaf = false;
    bool needs_grad = false;
  };

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  std::size_t visited_ = 0;
};

// ---- Core tensor operations ------------------------------------------------

Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double factor);

/// [m,k]x[k,n] -> [m,n] or [m,k]x[k] -> [m].
Var matmul(Tape& t, Var a, Var b);

/// x W^T + b for x of shape [in] or [batch, in]; W is [out, in], b is [out].
Var linear(Tape& t, Var x, Var weight, Var bias);

/// Concatenates 1-D tensors in argument order.
Var concat(Tape& t, std::span<const Var> parts);
Var slice(Tape& t, Var a, std::size_t begin, std::size_t length);
Var reshape(Tape& t, Var a, std::vector<std::size_t> shape);

/// Row `index` of a 2-D table as a 1-D tensor.
Var row(Tape& t, Var table, std::size_t index);

/// Sum of equal-shaped tensors.
Var add_n(Tape& t, std::span<const Var> terms);
Var sum(Tape& t, Var a);

// ---- Activations and losses ------------------------------------------------

double sigmoid_value(double x) noexcept;
double tanh_value(double x) noexcept;

Var sigmoid(Tape& t, Var x);
/// 2 / (1 + e^{-2x}) - 1, evaluated in a form that never overflows.
Var tanh_act(Tape& t, Var x);
Var relu(Tape& t, Var x);

std::vector<double> softmax(std::span<const double> logits);

/// -log softmax(logits)[label] for 1-D logits, or the batch mean for [batch, classes]
/// logits with one label per row. Label error when a label is out of range.
Var softmax_xent(Tape& t, Var logits, std::size_t label);
Var softmax_xent(Tape& t, Var logits, std::span<const std::size_t> labels);

// ---- Quantum node ----------------------------------------------------------

/// Exact derivative of every observable with respect to every parameter slot:
/// result[j][k] = d<Z_j>/d params[k]. Single-qubit rotations use the two-term
/// shift rule; CRZ uses the four-term rule of its {0, +-1/2, +-1} spectrum.
std::vector<std::vector<double>> parameter_shift_jacobian(const qsim::Circuit& circuit,
                                                          std::span<const double> params);

/// Forward value is run_circuit(circuit, params). Backward contracts the
/// upstream gradient with parameter_shift_jacobian.
Var quantum_node(Tape& t, std::shared_ptr<const qsim::Circuit> circuit, Var params);

}  // namespace hqml::diff
