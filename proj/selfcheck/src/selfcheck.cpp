#include "hqml/selfcheck.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include "hqml/nn.hpp"
#include "hqml/params.hpp"
#include "hqml/qml.hpp"

namespace hqml::selfcheck {

namespace {

using qsim::GateKind;
using qsim::GateOp;
using Mat2 = std::array<Complex, 4>;

constexpr double kPi = std::numbers::pi;
const Complex kI{0.0, 1.0};

Mat2 single_qubit_matrix(GateKind kind, double theta) {
  const double c = std::cos(theta / 2.0);
  const double s = std::sin(theta / 2.0);
  const double r = 1.0 / std::sqrt(2.0);
  switch (kind) {
    case GateKind::H: return {r, r, r, -r};
    case GateKind::X: return {0.0, 1.0, 1.0, 0.0};
    case GateKind::RX: return {c, -kI * s, -kI * s, c};
    case GateKind::RY: return {c, -s, s, c};
    case GateKind::RZ: return {std::exp(-kI * (theta / 2.0)), 0.0, 0.0, std::exp(kI * (theta / 2.0))};
    default: break;
  }
  throw std::logic_error("not a single-qubit gate");
}

DenseMatrix kron(const DenseMatrix& a, std::size_t da, const Mat2& b) {
  const std::size_t d = da * 2;
  DenseMatrix out(d * d);
  for (std::size_t i = 0; i < da; ++i)
    for (std::size_t j = 0; j < da; ++j)
      for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t l = 0; l < 2; ++l) out[(i * 2 + k) * d + (j * 2 + l)] = a[i * da + j] * b[k * 2 + l];
  return out;
}

// Kronecker product with factors[w] acting on wire w; the most significant wire comes first.
DenseMatrix kron_all(const std::vector<Mat2>& factors) {
  DenseMatrix m{1.0};
  std::size_t dim = 1;
  for (std::size_t w = factors.size(); w-- > 0;) {
    m = kron(m, dim, factors[w]);
    dim *= 2;
  }
  return m;
}

const Mat2 kIdentity{1.0, 0.0, 0.0, 1.0};
const Mat2 kProj0{1.0, 0.0, 0.0, 0.0};
const Mat2 kProj1{0.0, 0.0, 0.0, 1.0};

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

GateKind random_kind(Rng& rng, int n_wires) {
  static constexpr GateKind kinds[] = {GateKind::H,  GateKind::X,    GateKind::RX, GateKind::RY,
                                       GateKind::RZ, GateKind::CNOT, GateKind::CRZ};
  for (;;) {
    const GateKind k = kinds[rng.below(7)];
    if (qsim::arity(k) <= n_wires) return k;
  }
}

std::vector<int> random_wires(Rng& rng, int n_wires, int arity) {
  const int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_wires)));
  if (arity == 1) return {a};
  int b = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_wires - 1)));
  if (b >= a) ++b;
  return {a, b};
}

}  // namespace

DenseMatrix dense_gate_matrix(int n_wires, const GateOp& op) {
  const auto n = static_cast<std::size_t>(n_wires);
  const double theta = op.param.value_or(0.0);
  if (qsim::arity(op.kind) == 1) {
    std::vector<Mat2> f(n, kIdentity);
    f[static_cast<std::size_t>(op.wires[0])] = single_qubit_matrix(op.kind, theta);
    return kron_all(f);
  }
  const auto c = static_cast<std::size_t>(op.wires[0]);
  const auto t = static_cast<std::size_t>(op.wires[1]);
  const Mat2 target = single_qubit_matrix(op.kind == GateKind::CNOT ? GateKind::X : GateKind::RZ, theta);
  std::vector<Mat2> off(n, kIdentity), on(n, kIdentity);
  off[c] = kProj0;
  on[c] = kProj1;
  on[t] = target;
  auto m = kron_all(off);
  const auto m1 = kron_all(on);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] += m1[i];
  return m;
}

std::vector<Complex> dense_run(int n_wires, std::vector<Complex> state, const std::vector<GateOp>& ops) {
  const std::size_t dim = state.size();
  for (const auto& op : ops) {
    const auto m = dense_gate_matrix(n_wires, op);
    std::vector<Complex> next(dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
      Complex acc = 0.0;
      for (std::size_t j = 0; j < dim; ++j) acc += m[i * dim + j] * state[j];
      next[i] = acc;
    }
    state = std::move(next);
  }
  return state;
}

RandomCircuit random_circuit(Rng& rng, int max_wires, int max_gates) {
  RandomCircuit rc;
  rc.n_wires = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_wires)));
  const auto n_gates = 1 + rng.below(static_cast<std::uint64_t>(max_gates));
  for (std::uint64_t g = 0; g < n_gates; ++g) {
    GateOp op;
    op.kind = random_kind(rng, rc.n_wires);
    op.wires = random_wires(rng, rc.n_wires, qsim::arity(op.kind));
    if (qsim::is_parametric(op.kind)) op.param = rng.uniform(-2.0 * kPi, 2.0 * kPi);
    rc.ops.push_back(std::move(op));
  }
  return rc;
}

qsim::Circuit random_vqc(Rng& rng, int max_wires, std::size_t max_params) {
  const int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_wires)));
  const std::size_t n_params = 1 + rng.below(max_params);
  qsim::Circuit c(n);
  for (int w = 0; w < n; ++w) {
    if (rng.uniform() < 0.5) c.h(w);
  }
  std::size_t next_slot = 0;
  while (next_slot < n_params) {
    const GateKind kind = random_kind(rng, n);
    const auto wires = random_wires(rng, n, qsim::arity(kind));
    qsim::ParamRef p = qsim::ParamRef::none();
    if (qsim::is_parametric(kind)) {
      // Mostly fresh slots, occasionally a reused slot or a fixed angle.
      const double u = rng.uniform();
      if (u < 0.1) p = qsim::ParamRef::value(rng.uniform(-kPi, kPi));
      else if (u < 0.2 && next_slot > 0) p = qsim::ParamRef::from_slot(rng.below(next_slot));
      else p = qsim::ParamRef::from_slot(next_slot++);
    }
    c.add(kind, wires, p);
  }
  c.measure_all_z();
  return c;
}

std::vector<std::vector<double>> finite_difference_jacobian(const qsim::Circuit& circuit,
                                                           std::vector<double> params, double eps) {
  const std::size_t n_obs = circuit.observables().size();
  std::vector<std::vector<double>> jac(n_obs, std::vector<double>(params.size()));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double orig = params[k];
    params[k] = orig + eps;
    const auto plus = qsim::run_circuit(circuit, params);
    params[k] = orig - eps;
    const auto minus = qsim::run_circuit(circuit, params);
    params[k] = orig;
    for (std::size_t j = 0; j < n_obs; ++j) jac[j][k] = (plus[j] - minus[j]) / (2.0 * eps);
  }
  return jac;
}

GradCheck gradcheck(const TapeFn& f, const std::vector<diff::Tensor>& inputs, double eps, double floor) {
  diff::Tape tape;
  std::vector<diff::Var> leaves;
  for (const auto& t : inputs) leaves.push_back(tape.leaf(t));
  const auto out = f(tape, leaves);
  tape.backward(out);

  auto eval = [&](const std::vector<diff::Tensor>& xs) {
    diff::Tape t;
    std::vector<diff::Var> vs;
    for (const auto& x : xs) vs.push_back(t.leaf(x));
    return t.value(f(t, vs))[0];
  };

  GradCheck r;
  auto xs = inputs;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto& analytic = tape.grad(leaves[i]);
    for (std::size_t k = 0; k < xs[i].size(); ++k) {
      const double orig = xs[i][k];
      xs[i][k] = orig + eps;
      const double fp = eval(xs);
      xs[i][k] = orig - eps;
      const double fm = eval(xs);
      xs[i][k] = orig;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double a = analytic[k];
      const double abs_err = std::abs(a - numeric);
      r.max_abs_error = std::max(r.max_abs_error, abs_err);
      r.max_rel_error = std::max(r.max_rel_error, abs_err / std::max({std::abs(a), std::abs(numeric), floor}));
      ++r.coordinates;
    }
  }
  return r;
}

CheckResult check_simulator_oracle(std::size_t n_circuits, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckResult r{"qsim vs dense Kronecker oracle", true, n_circuits, 0.0, 1e-10, 0.0, ""};
  Rng rng(seed, Stream::Data);
  double worst_norm = 0.0;
  for (std::size_t c = 0; c < n_circuits; ++c) {
    const auto rc = random_circuit(rng);
    const std::size_t dim = std::size_t{1} << rc.n_wires;
    // Half the cases start from a random normalised state instead of |0...0>.
    std::vector<Complex> init(dim, 0.0);
    if (c % 2 == 0) {
      init[0] = 1.0;
    } else {
      double norm = 0.0;
      for (auto& a : init) {
        a = {rng.normal(), rng.normal()};
        norm += std::norm(a);
      }
      for (auto& a : init) a /= std::sqrt(norm);
    }
    auto state = c % 2 == 0 ? qsim::new_zero_state(rc.n_wires) : qsim::QuantumState::from_amplitudes(init);
    for (const auto& op : rc.ops) qsim::apply_gate_inplace(state, op);
    const auto expected = dense_run(rc.n_wires, init, rc.ops);
    double oracle_norm = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      r.worst = std::max(r.worst, std::abs(state[i] - expected[i]));
      oracle_norm += std::norm(expected[i]);
    }
    worst_norm = std::max({worst_norm, std::abs(state.norm_squared() - 1.0), std::abs(oracle_norm - 1.0)});
  }
  r.pass = r.worst <= 1e-10 && worst_norm <= 1e-12;
  std::ostringstream d;
  d << "max |amp diff| " << r.worst << ", max |norm - 1| " << worst_norm;
  r.detail = d.str();
  r.seconds = elapsed(t0);
  return r;
}

CheckResult check_parameter_shift(std::size_t n_circuits, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckResult r{"parameter shift vs finite differences", true, n_circuits, 0.0, 1e-6, 0.0, ""};
  Rng rng(seed, Stream::Baseline);
  std::size_t entries = 0;
  for (std::size_t c = 0; c < n_circuits; ++c) {
    const auto circuit = random_vqc(rng);
    std::vector<double> params(circuit.n_slots());
    for (auto& p : params) p = rng.uniform(-kPi, kPi);
    const auto shift = diff::parameter_shift_jacobian(circuit, params);
    const auto fd = finite_difference_jacobian(circuit, params, 1e-4);
    for (std::size_t j = 0; j < shift.size(); ++j) {
      for (std::size_t k = 0; k < params.size(); ++k) {
        r.worst = std::max(r.worst, std::abs(shift[j][k] - fd[j][k]));
        ++entries;
      }
    }
  }
  r.pass = r.worst <= r.tolerance;
  r.detail = "max |shift - fd| " + std::to_string(r.worst) + " over " + std::to_string(entries) + " entries";
  r.seconds = elapsed(t0);
  return r;
}

namespace {

diff::Tensor random_tensor(Rng& rng, std::vector<std::size_t> shape, double scale) {
  diff::Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = scale * rng.normal();
  return t;
}

// sum(weights * v) with constant weights, giving every output element its own sensitivity.
diff::Var weighted_sum(diff::Tape& tape, diff::Var v, const diff::Tensor& weights) {
  return diff::sum(tape, diff::mul(tape, v, tape.constant(weights)));
}

struct LayerCase {
  std::string name;
  std::function<GradCheck(Rng&, std::uint64_t)> run;
};

std::vector<LayerCase> layer_cases() {
  std::vector<LayerCase> cases;
  cases.push_back({"linear", [](Rng& rng, std::uint64_t) {
                     const std::size_t in = 1 + rng.below(6), out = 1 + rng.below(6), batch = 1 + rng.below(3);
                     const auto w = random_tensor(rng, {out}, 1.0);
                     const auto wb = random_tensor(rng, {batch, out}, 1.0);
                     return gradcheck(
                         [&](diff::Tape& t, const std::vector<diff::Var>& v) {
                           auto single = weighted_sum(t, diff::linear(t, v[0], v[1], v[2]), w);
                           auto batched = weighted_sum(t, diff::linear(t, v[3], v[1], v[2]), wb);
                           return diff::add(t, single, batched);
                         },
                         {random_tensor(rng, {in}, 1.0), random_tensor(rng, {out, in}, 1.0),
                          random_tensor(rng, {out}, 1.0), random_tensor(rng, {batch, in}, 1.0)});
                   }});
  cases.push_back({"embedding", [](Rng& rng, std::uint64_t) {
                     const std::size_t vocab = 2 + rng.below(6), dim = 1 + rng.below(8);
                     std::vector<std::size_t> ids;
                     for (int k = 0; k < 4; ++k) ids.push_back(rng.below(vocab));  // repeats exercise fan-out
                     std::vector<diff::Tensor> ws;
                     for (int k = 0; k < 4; ++k) ws.push_back(random_tensor(rng, {dim}, 1.0));
                     return gradcheck(
                         [&](diff::Tape& t, const std::vector<diff::Var>& v) {
                           std::vector<diff::Var> terms;
                           for (int k = 0; k < 4; ++k) terms.push_back(weighted_sum(t, diff::row(t, v[0], ids[k]), ws[k]));
                           return diff::add_n(t, terms);
                         },
                         {random_tensor(rng, {vocab, dim}, 1.0)});
                   }});
  cases.push_back({"sigmoid", [](Rng& rng, std::uint64_t) {
                     const std::size_t n = 1 + rng.below(8);
                     const auto w = random_tensor(rng, {n}, 1.0);
                     return gradcheck([&](diff::Tape& t, const std::vector<diff::Var>& v) {
                       return weighted_sum(t, diff::sigmoid(t, v[0]), w);
                     }, {random_tensor(rng, {n}, 3.0)});
                   }});
  cases.push_back({"tanh", [](Rng& rng, std::uint64_t) {
                     const std::size_t n = 1 + rng.below(8);
                     const auto w = random_tensor(rng, {n}, 1.0);
                     return gradcheck([&](diff::Tape& t, const std::vector<diff::Var>& v) {
                       return weighted_sum(t, diff::tanh_act(t, v[0]), w);
                     }, {random_tensor(rng, {n}, 2.0)});
                   }});
  cases.push_back({"softmax_xent", [](Rng& rng, std::uint64_t) {
                     const std::size_t k = 2 + rng.below(6), batch = 1 + rng.below(4);
                     const std::size_t label = rng.below(k);
                     std::vector<std::size_t> labels;
                     for (std::size_t b = 0; b < batch; ++b) labels.push_back(rng.below(k));
                     return gradcheck(
                         [&](diff::Tape& t, const std::vector<diff::Var>& v) {
                           return diff::add(t, diff::softmax_xent(t, v[0], label), diff::softmax_xent(t, v[1], labels));
                         },
                         {random_tensor(rng, {k}, 2.0), random_tensor(rng, {batch, k}, 2.0)});
                   }});
  auto cell_case = [](bool quantum) {
    return [quantum](Rng& rng, std::uint64_t s) {
      ParamSet ps;
      Rng init(s, Stream::Init);
      nn::LSTMCell classical;
      qml::QLSTMCell hybrid;
      if (quantum) hybrid = qml::make_qlstm_cell(ps, "q", 8, 6, 4, 1, init);
      else classical = nn::make_lstm_cell(ps, "c", 8, 6, init);
      std::vector<diff::Tensor> inputs;
      for (std::size_t i = 0; i < ps.size(); ++i) inputs.push_back(ps.at(i));
      const std::size_t n_params = inputs.size();
      inputs.push_back(random_tensor(rng, {8}, 1.0));
      inputs.push_back(random_tensor(rng, {6}, 0.5));
      inputs.push_back(random_tensor(rng, {6}, 0.5));
      const auto wh = random_tensor(rng, {6}, 1.0);
      const auto wc = random_tensor(rng, {6}, 1.0);
      return gradcheck(
          [&](diff::Tape& t, const std::vector<diff::Var>& v) {
            const Bound bound(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n_params));
            const nn::LSTMCellState prev{v[n_params + 1], v[n_params + 2]};
            const auto next = quantum ? qml::qlstm_cell(t, bound, hybrid, v[n_params], prev)
                                      : nn::lstm_cell(t, bound, classical, v[n_params], prev);
            return diff::add(t, weighted_sum(t, next.h, wh), weighted_sum(t, next.c, wc));
          },
          inputs);
    };
  };
  cases.push_back({"lstm_cell", cell_case(false)});
  cases.push_back({"qlstm_cell", cell_case(true)});
  return cases;
}

}  // namespace

std::vector<CheckResult> check_autodiff(std::size_t n_seeds, std::uint64_t seed) {
  std::vector<CheckResult> results;
  for (const auto& lc : layer_cases()) {
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r{"autodiff " + lc.name, true, n_seeds, 0.0, 1e-5, 0.0, ""};
    std::size_t coords = 0;
    for (std::size_t s = 0; s < n_seeds; ++s) {
      const std::uint64_t case_seed = seed * 1000003ULL + s;
      Rng rng(case_seed, Stream::Data);
      const auto g = lc.run(rng, case_seed);
      r.worst = std::max(r.worst, g.max_rel_error);
      coords += g.coordinates;
    }
    r.pass = r.worst <= r.tolerance;
    r.detail = "max rel error " + std::to_string(r.worst) + " over " + std::to_string(coords) + " coordinates";
    r.seconds = elapsed(t0);
    results.push_back(std::move(r));
  }
  return results;
}

std::vector<CheckResult> run_all(std::uint64_t seed, std::size_t circuits, std::size_t vqcs,
                                 std::size_t grad_seeds) {
  std::vector<CheckResult> all;
  all.push_back(check_simulator_oracle(circuits, seed));
  all.push_back(check_parameter_shift(vqcs, seed));
  for (auto& r : check_autodiff(grad_seeds, seed)) all.push_back(std::move(r));
  return all;
}

}  // namespace hqml::selfcheck
