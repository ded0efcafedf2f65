#include "hqml/diff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "hqml/error.hpp"

namespace hqml::diff {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    fail(ErrorKind::Shape, std::string(op) + ": shape " + a.shape_string() + " vs " +
                               b.shape_string());
  }
}

void require_rank(const Tensor& a, std::size_t rank, const char* op) {
  if (a.rank() != rank) {
    fail(ErrorKind::Shape, std::string(op) + ": expected rank " + std::to_string(rank) +
                               ", got shape " + a.shape_string());
  }
}

void accumulate(Tensor& dst, std::span<const double> src, double factor = 1.0) {
  auto d = dst.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += factor * src[i];
}

}  // namespace

// ---- Tape ------------------------------------------------------------------

Var Tape::leaf(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.is_leaf = true;
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::vector<std::size_t> inputs, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  for (auto id : inputs) {
    if (id >= nodes_.size()) fail(ErrorKind::Shape, "tape input refers to a future node");
    n.needs_grad = n.needs_grad || nodes_[id].needs_grad;
  }
  n.inputs = std::move(inputs);
  n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

const Tensor& Tape::grad(Var v) const {
  if (v.id >= grads_.size()) fail(ErrorKind::Shape, "gradient requested before backward()");
  return grads_[v.id];
}

void Tape::backward(Var loss) {
  if (!nodes_.at(loss.id).value.is_scalar()) {
    fail(ErrorKind::Shape, "backward() needs a scalar loss, got shape " +
                               nodes_[loss.id].value.shape_string());
  }
  grads_.clear();
  grads_.reserve(nodes_.size());
  for (const auto& n : nodes_) grads_.emplace_back(n.value.shape(), 0.0);
  grads_[loss.id][0] = 1.0;
  visited_ = 0;
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    const Node& n = nodes_[id];
    if (!n.backward || !n.needs_grad) continue;
    n.backward(*this, id);
    ++visited_;
  }
}

// ---- Elementwise -----------------------------------------------------------

Var add(Tape& t, Var a, Var b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  require_same_shape(av, bv, "add");
  Tensor out = av;
  accumulate(out, bv.data());
  return t.record(std::move(out), {a.id, b.id}, [](Tape& tp, std::size_t self) {
    const auto in = tp.inputs(self);
    const Tensor g = tp.grad_mut(self);
    accumulate(tp.grad_mut(in[0]), g.data());
    accumulate(tp.grad_mut(in[1]), g.data());
  });
}

Var sub(Tape& t, Var a, Var b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  require_same_shape(av, bv, "sub");
  Tensor out = av;
  accumulate(out, bv.data(), -1.0);
  return t.record(std::move(out), {a.id, b.id}, [](Tape& tp, std::size_t self) {
    const auto in = tp.inputs(self);
    const Tensor g = tp.grad_mut(self);
    accumulate(tp.grad_mut(in[0]), g.data());
    accumulate(tp.grad_mut(in[1]), g.data(), -1.0);
  });
}

Var mul(Tape& t, Var a, Var b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  require_same_shape(av, bv, "mul");
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return t.record(std::move(out), {a.id, b.id}, [](Tape& tp, std::size_t self) {
    const auto in = tp.inputs(self);
    const Tensor& g = tp.grad_mut(self);
    const Tensor& x = tp.value(Var{in[0]});
    const Tensor& y = tp.value(Var{in[1]});
    Tensor& gx = tp.grad_mut(in[0]);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i];
    Tensor& gy = tp.grad_mut(in[1]);
    for (std::size_t i = 0; i < g.size(); ++i) gy[i] += g[i] * x[i];
  });
}

Var scale(Tape& t, Var a, double factor) {
  Tensor out = t.value(a);
  for (auto& v : out.data()) v *= factor;
  return t.record(std::move(out), {a.id}, [factor](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_mut(self);
    accumulate(tp.grad_mut(tp.inputs(self)[0]), g.data(), factor);
  });
}

// ---- Linear algebra --------------------------------------------------------

Var matmul(Tape& t, Var a, Var b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  require_rank(av, 2, "matmul");
  const std::size_t m = av.dim(0), k = av.dim(1);
  if (bv.rank() < 1 || bv.rank() > 2 || bv.dim(0) != k) {
    fail(ErrorKind::Shape, "matmul: " + av.shape_string() + " x " + bv.shape_string());
  }
  const std::size_t n = bv.rank() == 2 ? bv.dim(1) : 1;
  Tensor out(bv.rank() == 2 ? std::vector<std::size_t>{m, n} : std::vector<std::size_t>{m}, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * bv[p * n + j];
    }
  }
  return t.record(std::move(out), {a.id, b.id}, [m, k, n](Tape& tp, std::size_t self) {
    const auto in = tp.inputs(self);
    const Tensor& g = tp.grad_mut(self);
    const Tensor& x = tp.value(Var{in[0]});
    const Tensor& y = tp.value(Var{in[1]});
    Tensor& gx = tp.grad_mut(in[0]);
    Tensor& gy = tp.grad_mut(in[1]);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t p = 0; p < k; ++p) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          acc += g[i * n + j] * y[p * n + j];
          gy[p * n + j] += x[i * k + p] * g[i * n + j];
        }
        gx[i * k + p] += acc;
      }
    }
  });
}

Var linear(Tape& t, Var x, Var weight, Var bias) {
  const Tensor& xv = t.value(x);
  const Tensor& wv = t.value(weight);
  const Tensor& bv = t.value(bias);
  require_rank(wv, 2, "linear");
  const std::size_t out_dim = wv.dim(0), in_dim = wv.dim(1);
  if (bv.rank() != 1 || bv.dim(0) != out_dim) {
    fail(ErrorKind::Shape, "linear: bias " + bv.shape_string() + " for weight " + wv.shape_string());
  }
  std::size_t batch = 1;
  std::vector<std::size_t> out_shape{out_dim};
  if (xv.rank() == 1 && xv.dim(0) == in_dim) {
    batch = 1;
  } else if (xv.rank() == 2 && xv.dim(1) == in_dim) {
    batch = xv.dim(0);
    out_shape = {batch, out_dim};
  } else {
    fail(ErrorKind::Shape, "linear: input " + xv.shape_string() + " for weight " + wv.shape_string());
  }
  Tensor out(out_shape, 0.0);
  for (std::size_t r = 0; r < batch; ++r) {
    for (std::size_t o = 0; o < out_dim; ++o) {
      double acc = bv[o];
      for (std::size_t i = 0; i < in_dim; ++i) acc += wv[o * in_dim + i] * xv[r * in_dim + i];
      out[r * out_dim + o] = acc;
    }
  }
  return t.record(std::move(out), {x.id, weight.id, bias.id},
                  [batch, in_dim, out_dim](Tape& tp, std::size_t self) {
                    const auto in = tp.inputs(self);
                    const Tensor& g = tp.grad_mut(self);
                    const Tensor& xv2 = tp.value(Var{in[0]});
                    const Tensor& wv2 = tp.value(Var{in[1]});
                    Tensor& gx = tp.grad_mut(in[0]);
                    Tensor& gw = tp.grad_mut(in[1]);
                    Tensor& gb = tp.grad_mut(in[2]);
                    for (std::size_t r = 0; r < batch; ++r) {
                      for (std::size_t o = 0; o < out_dim; ++o) {
                        const double go = g[r * out_dim + o];
                        if (go == 0.0) continue;
                        gb[o] += go;
                        for (std::size_t i = 0; i < in_dim; ++i) {
                          gw[o * in_dim + i] += go * xv2[r * in_dim + i];
                          gx[r * in_dim + i] += go * wv2[o * in_dim + i];
                        }
                      }
                    }
                  });
}

// ---- Structural ------------------------------------------------------------

Var concat(Tape& t, std::span<const Var> parts) {
  if (parts.empty()) fail(ErrorKind::Shape, "concat of nothing");
  std::vector<double> data;
  std::vector<std::size_t> ids;
  std::vector<std::size_t> sizes;
  for (Var p : parts) {
    const Tensor& v = t.value(p);
    require_rank(v, 1, "concat");
    data.insert(data.end(), v.data().begin(), v.data().end());
    ids.push_back(p.id);
    sizes.push_back(v.size());
  }
  return t.record(Tensor::vector(std::move(data)), std::move(ids),
                  [sizes](Tape& tp, std::size_t self) {
                    const auto in = tp.inputs(self);
                    const Tensor g = tp.grad_mut(self);
                    std::size_t offset = 0;
                    for (std::size_t k = 0; k < in.size(); ++k) {
                      accumulate(tp.grad_mut(in[k]), g.data().subspan(offset, sizes[k]));
                      offset += sizes[k];
                    }
                  });
}

Var slice(Tape& t, Var a, std::size_t begin, std::size_t length) {
  const Tensor& av = t.value(a);
  require_rank(av, 1, "slice");
  if (length == 0 || begin + length > av.size()) {
    fail(ErrorKind::Shape, "slice [" + std::to_string(begin) + ", +" + std::to_string(length) +
                               ") of " + av.shape_string());
  }
  std::vector<double> data(av.data().begin() + static_cast<std::ptrdiff_t>(begin),
                           av.data().begin() + static_cast<std::ptrdiff_t>(begin + length));
  return t.record(Tensor::vector(std::move(data)), {a.id}, [begin](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_mut(self);
    Tensor& ga = tp.grad_mut(tp.inputs(self)[0]);
    for (std::size_t i = 0; i < g.size(); ++i) ga[begin + i] += g[i];
  });
}

Var reshape(Tape& t, Var a, std::vector<std::size_t> shape) {
  const Tensor& av = t.value(a);
  Tensor out(std::move(shape), std::vector<double>(av.data().begin(), av.data().end()));
  return t.record(std::move(out), {a.id}, [](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_mut(self);
    accumulate(tp.grad_mut(tp.inputs(self)[0]), g.data());
  });
}

Var row(Tape& t, Var table, std::size_t index) {
  const Tensor& tv = t.value(table);
  require_rank(tv, 2, "row");
  if (index >= tv.dim(0)) {
    fail(ErrorKind::Vocab, "row " + std::to_string(index) + " outside table of " +
                               std::to_string(tv.dim(0)) + " rows");
  }
  const std::size_t cols = tv.dim(1);
  std::vector<double> data(tv.data().begin() + static_cast<std::ptrdiff_t>(index * cols),
                           tv.data().begin() + static_cast<std::ptrdiff_t>((index + 1) * cols));
  return t.record(Tensor::vector(std::move(data)), {table.id},
                  [index, cols](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad_mut(self);
                    Tensor& gt = tp.grad_mut(tp.inputs(self)[0]);
                    for (std::size_t c = 0; c < cols; ++c) gt[index * cols + c] += g[c];
                  });
}

Var add_n(Tape& t, std::span<const Var> terms) {
  if (terms.empty()) fail(ErrorKind::Shape, "add_n of nothing");
  Tensor out = t.value(terms[0]);
  std::vector<std::size_t> ids{terms[0].id};
  for (std::size_t k = 1; k < terms.size(); ++k) {
    const Tensor& v = t.value(terms[k]);
    require_same_shape(out, v, "add_n");
    accumulate(out, v.data());
    ids.push_back(terms[k].id);
  }
  return t.record(std::move(out), std::move(ids), [](Tape& tp, std::size_t self) {
    const Tensor g = tp.grad_mut(self);
    for (auto id : tp.inputs(self)) accumulate(tp.grad_mut(id), g.data());
  });
}

Var sum(Tape& t, Var a) {
  const Tensor& av = t.value(a);
  double s = 0.0;
  for (double v : av.data()) s += v;
  return t.record(Tensor::scalar(s), {a.id}, [](Tape& tp, std::size_t self) {
    const double g = tp.grad_mut(self)[0];
    for (auto& v : tp.grad_mut(tp.inputs(self)[0]).data()) v += g;
  });
}

// ---- Activations -----------------------------------------------------------

double sigmoid_value(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double tanh_value(double x) noexcept {
  // 2 / (1 + e^{-2x}) - 1, mirrored for negative x so exp never overflows.
  if (x >= 0.0) return 2.0 / (1.0 + std::exp(-2.0 * x)) - 1.0;
  return -(2.0 / (1.0 + std::exp(2.0 * x)) - 1.0);
}

Var sigmoid(Tape& t, Var x) {
  Tensor out = t.value(x);
  for (auto& v : out.data()) v = sigmoid_value(v);
  return t.record(std::move(out), {x.id}, [](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_mut(self);
    const Tensor& s = tp.value(Var{self});
    Tensor& gx = tp.grad_mut(tp.inputs(self)[0]);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * s[i] * (1.0 - s[i]);
  });
}

Var tanh_act(Tape& t, Var x) {
  Tensor out = t.value(x);
  for (auto& v : out.data()) v = tanh_value(v);
  return t.record(std::move(out), {x.id}, [](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_mut(self);
    const Tensor& y = tp.value(Var{self});
    Tensor& gx = tp.grad_mut(tp.inputs(self)[0]);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var relu(Tape& t, Var x) {
  Tensor out = t.value(x);
  for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
  return t.record(std::move(out), {x.id}, [](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_mut(self);
    const Tensor& y = tp.value(Var{self});
    Tensor& gx = tp.grad_mut(tp.inputs(self)[0]);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (y[i] > 0.0) gx[i] += g[i];
    }
  });
}

std::vector<double> softmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    z += p[i];
  }
  for (auto& v : p) v /= z;
  return p;
}

Var softmax_xent(Tape& t, Var logits, std::size_t label) {
  const std::size_t labels[] = {label};
  const Tensor& lv = t.value(logits);
  require_rank(lv, 1, "softmax_xent");
  if (lv.size() < 2) fail(ErrorKind::Shape, "softmax_xent needs at least two classes");
  if (label >= lv.size()) {
    fail(ErrorKind::Label, "label " + std::to_string(label) + " outside " +
                               std::to_string(lv.size()) + " classes");
  }
  // Treat as a batch of one; the batch path handles both shapes.
  return softmax_xent(t, logits, std::span<const std::size_t>(labels));
}

Var softmax_xent(Tape& t, Var logits, std::span<const std::size_t> labels) {
  const Tensor& lv = t.value(logits);
  std::size_t batch = 1, classes = 0;
  if (lv.rank() == 1) {
    classes = lv.dim(0);
  } else if (lv.rank() == 2) {
    batch = lv.dim(0);
    classes = lv.dim(1);
  } else {
    fail(ErrorKind::Shape, "softmax_xent: logits " + lv.shape_string());
  }
  if (classes < 2) fail(ErrorKind::Shape, "softmax_xent needs at least two classes");
  if (labels.size() != batch) {
    fail(ErrorKind::Shape, "softmax_xent: " + std::to_string(labels.size()) + " labels for batch of " +
                               std::to_string(batch));
  }
  std::vector<double> probs(batch * classes);
  double loss = 0.0;
  for (std::size_t r = 0; r < batch; ++r) {
    if (labels[r] >= classes) {
      fail(ErrorKind::Label, "label " + std::to_string(labels[r]) + " outside " +
                                 std::to_string(classes) + " classes");
    }
    const auto row_logits = lv.data().subspan(r * classes, classes);
    const double mx = *std::max_element(row_logits.begin(), row_logits.end());
    double z = 0.0;
    for (double v : row_logits) z += std::exp(v - mx);
    const double log_z = mx + std::log(z);
    loss += log_z - row_logits[labels[r]];
    for (std::size_t c = 0; c < classes; ++c) probs[r * classes + c] = std::exp(row_logits[c] - log_z);
  }
  loss /= static_cast<double>(batch);
  std::vector<std::size_t> label_copy(labels.begin(), labels.end());
  return t.record(Tensor::scalar(loss), {logits.id},
                  [probs = std::move(probs), label_copy = std::move(label_copy), batch,
                   classes](Tape& tp, std::size_t self) {
                    const double g = tp.grad_mut(self)[0] / static_cast<double>(batch);
                    Tensor& gl = tp.grad_mut(tp.inputs(self)[0]);
                    for (std::size_t r = 0; r < batch; ++r) {
                      for (std::size_t c = 0; c < classes; ++c) {
                        const double onehot = c == label_copy[r] ? 1.0 : 0.0;
                        gl[r * classes + c] += g * (probs[r * classes + c] - onehot);
                      }
                    }
                  });
}

// ---- Quantum node ----------------------------------------------------------

std::vector<std::vector<double>> parameter_shift_jacobian(const qsim::Circuit& circuit,
                                                          std::span<const double> params) {
  using qsim::GateKind;
  const std::size_t n_obs = circuit.observables().size();
  std::vector<std::vector<double>> jac(n_obs, std::vector<double>(params.size(), 0.0));
  const auto& ops = circuit.ops();
  constexpr double kHalfPi = std::numbers::pi / 2.0;
  // Four-term coefficients for a generator with spectrum {0, +-1/2}.
  const double c_near = (std::numbers::sqrt2 + 1.0) / (4.0 * std::numbers::sqrt2);
  const double c_far = (std::numbers::sqrt2 - 1.0) / (4.0 * std::numbers::sqrt2);

  auto expectations = [&](std::size_t k, double shift) {
    return qsim::measure(circuit, qsim::simulate_shifted(circuit, params, k, shift));
  };

  for (std::size_t k = 0; k < ops.size(); ++k) {
    const auto& op = ops[k];
    if (op.param.source != qsim::ParamRef::Source::Slot) continue;
    const std::size_t slot = op.param.slot;
    switch (op.kind) {
      case GateKind::RX:
      case GateKind::RY:
      case GateKind::RZ: {
        const auto plus = expectations(k, kHalfPi);
        const auto minus = expectations(k, -kHalfPi);
        for (std::size_t j = 0; j < n_obs; ++j) jac[j][slot] += 0.5 * (plus[j] - minus[j]);
        break;
      }
      case GateKind::CRZ: {
        const auto p1 = expectations(k, kHalfPi);
        const auto m1 = expectations(k, -kHalfPi);
        const auto p3 = expectations(k, 3.0 * kHalfPi);
        const auto m3 = expectations(k, -3.0 * kHalfPi);
        for (std::size_t j = 0; j < n_obs; ++j) {
          jac[j][slot] += c_near * (p1[j] - m1[j]) - c_far * (p3[j] - m3[j]);
        }
        break;
      }
      default:
        fail(ErrorKind::Differentiation,
             "no shift rule for parametric gate " + std::string(qsim::to_string(op.kind)));
    }
  }
  return jac;
}

Var quantum_node(Tape& t, std::shared_ptr<const qsim::Circuit> circuit, Var params) {
  const Tensor& pv = t.value(params);
  require_rank(pv, 1, "quantum_node");
  if (pv.size() != circuit->n_slots()) {
    fail(ErrorKind::Arity, "quantum_node: circuit has " + std::to_string(circuit->n_slots()) +
                               " slot(s), params " + pv.shape_string());
  }
  if (circuit->observables().empty()) fail(ErrorKind::Shape, "quantum_node: circuit measures nothing");
  auto expect = qsim::run_circuit(*circuit, pv.data());
  return t.record(Tensor::vector(std::move(expect)), {params.id},
                  [circuit = std::move(circuit)](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.grad_mut(self);
                    if (std::all_of(g.data().begin(), g.data().end(),
                                    [](double v) { return v == 0.0; })) {
                      return;
                    }
                    const std::size_t in = tp.inputs(self)[0];
                    const auto jac = parameter_shift_jacobian(*circuit, tp.value(Var{in}).data());
                    Tensor& gp = tp.grad_mut(in);
                    for (std::size_t j = 0; j < jac.size(); ++j) {
                      for (std::size_t k = 0; k < gp.size(); ++k) gp[k] += g[j] * jac[j][k];
                    }
                  });
}

}  // namespace hqml::diff
