#include "hqml/qsim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "hqml/error.hpp"

namespace hqml::qsim {

namespace {

void check_wire_count(int n_wires) {
  if (n_wires < 1 || n_wires > kMaxWires) {
    fail(ErrorKind::Size, "wire count " + std::to_string(n_wires) + " outside [1, " +
                              std::to_string(kMaxWires) + "]");
  }
}

void check_wire(int wire, int n_wires) {
  if (wire < 0 || wire >= n_wires) {
    fail(ErrorKind::Wire,
         "wire " + std::to_string(wire) + " out of range for " + std::to_string(n_wires) + " wires");
  }
}

// Shared by GateOp and CircuitOp paths once wires and angle are resolved.
void apply_resolved(QuantumState& s, GateKind kind, int w0, int w1, double theta) {
  switch (kind) {
    case GateKind::H: {
      const double r = 1.0 / std::sqrt(2.0);
      s.apply_matrix_1q(w0, r, r, r, -r);
      break;
    }
    case GateKind::X:
      s.apply_matrix_1q(w0, 0.0, 1.0, 1.0, 0.0);
      break;
    case GateKind::RX: {
      const double c = std::cos(theta / 2), sn = std::sin(theta / 2);
      s.apply_matrix_1q(w0, c, Complex(0, -sn), Complex(0, -sn), c);
      break;
    }
    case GateKind::RY: {
      const double c = std::cos(theta / 2), sn = std::sin(theta / 2);
      s.apply_matrix_1q(w0, c, -sn, sn, c);
      break;
    }
    case GateKind::RZ: {
      const double c = std::cos(theta / 2), sn = std::sin(theta / 2);
      s.apply_diagonal_1q(w0, Complex(c, -sn), Complex(c, sn));
      break;
    }
    case GateKind::CNOT:
      s.apply_cnot(w0, w1);
      break;
    case GateKind::CRZ: {
      const double c = std::cos(theta / 2), sn = std::sin(theta / 2);
      s.apply_controlled_diagonal(w0, w1, Complex(c, -sn), Complex(c, sn));
      break;
    }
  }
}

}  // namespace

std::string_view to_string(GateKind kind) noexcept {
  switch (kind) {
    case GateKind::H: return "H";
    case GateKind::X: return "X";
    case GateKind::RX: return "RX";
    case GateKind::RY: return "RY";
    case GateKind::RZ: return "RZ";
    case GateKind::CNOT: return "CNOT";
    case GateKind::CRZ: return "CRZ";
  }
  return "?";
}

GateKind gate_kind_from_string(std::string_view name) {
  for (auto k : {GateKind::H, GateKind::X, GateKind::RX, GateKind::RY, GateKind::RZ,
                 GateKind::CNOT, GateKind::CRZ}) {
    if (to_string(k) == name) return k;
  }
  fail(ErrorKind::Parse, "unknown gate '" + std::string(name) + "'");
}

QuantumState::QuantumState(int n_wires) {
  check_wire_count(n_wires);
  n_wires_ = n_wires;
  amps_.assign(std::size_t{1} << n_wires, Complex(0.0, 0.0));
  amps_[0] = 1.0;
}

QuantumState QuantumState::from_amplitudes(std::vector<Complex> amplitudes) {
  const std::size_t n = amplitudes.size();
  if (n < 2 || (n & (n - 1)) != 0) {
    fail(ErrorKind::Size, "amplitude count " + std::to_string(n) + " is not a power of two >= 2");
  }
  int wires = 0;
  while ((std::size_t{1} << wires) < n) ++wires;
  check_wire_count(wires);
  QuantumState s;
  s.n_wires_ = wires;
  s.amps_ = std::move(amplitudes);
  if (std::abs(s.norm_squared() - 1.0) > 1e-10) {
    fail(ErrorKind::Size, "amplitudes are not normalized");
  }
  return s;
}

double QuantumState::norm_squared() const noexcept {
  double total = 0.0;
  for (const auto& a : amps_) total += std::norm(a);
  return total;
}

void QuantumState::apply_matrix_1q(int wire, const Complex& m00, const Complex& m01,
                                   const Complex& m10, const Complex& m11) {
  const std::size_t stride = std::size_t{1} << wire;
  const std::size_t dim = amps_.size();
  for (std::size_t block = 0; block < dim; block += 2 * stride) {
    for (std::size_t i = block; i < block + stride; ++i) {
      const Complex a = amps_[i];
      const Complex b = amps_[i + stride];
      amps_[i] = m00 * a + m01 * b;
      amps_[i + stride] = m10 * a + m11 * b;
    }
  }
}

void QuantumState::apply_diagonal_1q(int wire, const Complex& d0, const Complex& d1) {
  const std::size_t mask = std::size_t{1} << wire;
  for (std::size_t i = 0; i < amps_.size(); ++i) {
    amps_[i] *= (i & mask) ? d1 : d0;
  }
}

void QuantumState::apply_cnot(int control, int target) {
  const std::size_t cmask = std::size_t{1} << control;
  const std::size_t tmask = std::size_t{1} << target;
  for (std::size_t i = 0; i < amps_.size(); ++i) {
    if ((i & cmask) && !(i & tmask)) std::swap(amps_[i], amps_[i | tmask]);
  }
}

void QuantumState::apply_controlled_diagonal(int control, int target, const Complex& d0,
                                             const Complex& d1) {
  const std::size_t cmask = std::size_t{1} << control;
  const std::size_t tmask = std::size_t{1} << target;
  for (std::size_t i = 0; i < amps_.size(); ++i) {
    if (i & cmask) amps_[i] *= (i & tmask) ? d1 : d0;
  }
}

QuantumState new_zero_state(int n_wires) { return QuantumState(n_wires); }

void apply_gate_inplace(QuantumState& state, const GateOp& op) {
  const int need = arity(op.kind);
  if (static_cast<int>(op.wires.size()) != need) {
    fail(ErrorKind::Wire, std::string(to_string(op.kind)) + " expects " + std::to_string(need) +
                              " wire(s), got " + std::to_string(op.wires.size()));
  }
  for (int w : op.wires) check_wire(w, state.n_wires());
  if (need == 2 && op.wires[0] == op.wires[1]) {
    fail(ErrorKind::Wire, "control and target wires must differ");
  }
  if (is_parametric(op.kind) != op.param.has_value()) {
    fail(ErrorKind::Param, std::string(to_string(op.kind)) +
                               (op.param ? " takes no angle" : " requires an angle"));
  }
  apply_resolved(state, op.kind, op.wires[0], need == 2 ? op.wires[1] : 0, op.param.value_or(0.0));
}

QuantumState apply_gate(const QuantumState& state, const GateOp& op) {
  QuantumState out = state;
  apply_gate_inplace(out, op);
  return out;
}

double expectation_z(const QuantumState& state, int wire) {
  check_wire(wire, state.n_wires());
  const std::size_t mask = std::size_t{1} << wire;
  double e = 0.0;
  const auto amps = state.amplitudes();
  for (std::size_t i = 0; i < amps.size(); ++i) {
    const double p = std::norm(amps[i]);
    e += (i & mask) ? -p : p;
  }
  return e;
}

Circuit::Circuit(int n_wires) : n_wires_(n_wires) { check_wire_count(n_wires); }

Circuit& Circuit::add(GateKind kind, std::span<const int> wires, ParamRef p) {
  const int need = arity(kind);
  if (static_cast<int>(wires.size()) != need) {
    fail(ErrorKind::Wire, std::string(to_string(kind)) + " expects " + std::to_string(need) +
                              " wire(s)");
  }
  for (int w : wires) check_wire(w, n_wires_);
  if (need == 2 && wires[0] == wires[1]) fail(ErrorKind::Wire, "control and target wires must differ");
  const bool has_param = p.source != ParamRef::Source::None;
  if (is_parametric(kind) != has_param) {
    fail(ErrorKind::Param, std::string(to_string(kind)) +
                               (has_param ? " takes no angle" : " requires an angle"));
  }
  CircuitOp op;
  op.kind = kind;
  op.wires[0] = wires[0];
  op.wires[1] = need == 2 ? wires[1] : 0;
  op.param = p;
  if (p.source == ParamRef::Source::Slot) n_slots_ = std::max(n_slots_, p.slot + 1);
  ops_.push_back(op);
  return *this;
}

Circuit& Circuit::h(int wire) { return add(GateKind::H, std::array{wire}, ParamRef::none()); }
Circuit& Circuit::x(int wire) { return add(GateKind::X, std::array{wire}, ParamRef::none()); }
Circuit& Circuit::rx(int wire, ParamRef p) { return add(GateKind::RX, std::array{wire}, p); }
Circuit& Circuit::ry(int wire, ParamRef p) { return add(GateKind::RY, std::array{wire}, p); }
Circuit& Circuit::rz(int wire, ParamRef p) { return add(GateKind::RZ, std::array{wire}, p); }
Circuit& Circuit::cnot(int control, int target) {
  return add(GateKind::CNOT, std::array{control, target}, ParamRef::none());
}
Circuit& Circuit::crz(int control, int target, ParamRef p) {
  return add(GateKind::CRZ, std::array{control, target}, p);
}

Circuit& Circuit::measure_z(int wire) {
  check_wire(wire, n_wires_);
  observables_.push_back(wire);
  return *this;
}

Circuit& Circuit::measure_all_z() {
  for (int w = 0; w < n_wires_; ++w) observables_.push_back(w);
  return *this;
}

QuantumState simulate_shifted(const Circuit& circuit, std::span<const double> params,
                              std::size_t op_index, double shift) {
  if (params.size() != circuit.n_slots()) {
    fail(ErrorKind::Arity, "circuit references " + std::to_string(circuit.n_slots()) +
                               " parameter slot(s), got " + std::to_string(params.size()));
  }
  QuantumState state(circuit.n_wires());
  const auto& ops = circuit.ops();
  for (std::size_t k = 0; k < ops.size(); ++k) {
    const auto& op = ops[k];
    double theta = op.angle(params);
    if (k == op_index) theta += shift;
    apply_resolved(state, op.kind, op.wires[0], op.wires[1], theta);
  }
  return state;
}

QuantumState simulate(const Circuit& circuit, std::span<const double> params) {
  return simulate_shifted(circuit, params, circuit.ops().size(), 0.0);
}

std::vector<double> measure(const Circuit& circuit, const QuantumState& state) {
  std::vector<double> out;
  out.reserve(circuit.observables().size());
  for (int w : circuit.observables()) out.push_back(expectation_z(state, w));
  return out;
}

std::vector<double> run_circuit(const Circuit& circuit, std::span<const double> params) {
  return measure(circuit, simulate(circuit, params));
}

}  // namespace hqml::qsim
